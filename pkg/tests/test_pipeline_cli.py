import json
import os

import numpy as np
import pytest

from causal_rewire.cli import export_artifact, main
from causal_rewire.config import PipelineConfig, load_config, parse_override
from causal_rewire.entropy import TEMatrix, load_te_csv
from causal_rewire.errors import ConfigError, EmptySweep, MissingArtifact, UnknownVariant
from causal_rewire.graph import build_adjacency, load_graph, save_graph
from causal_rewire.pipeline import run_ablation, run_pipeline, sweep_c
from oracles import complete

SMALL = [
    "data.synthetic.n=6", "data.synthetic.t=400", "data.synthetic.n_samples=24",
    "train.max_epochs=4", "train.lr=0.01", "model.layer_sizes=[4,2]",
    "model.fc_hidden_1=8", "model.fc_hidden_2=4",
]


def _small_args():
    return [a for kv in SMALL for a in ("--set", kv)]


def _small_cfg(**extra):
    return load_config(overrides=SMALL + [f"{k}={json.dumps(v)}" for k, v in extra.items()])


# ------------------------------------------------------------------------- config


def test_defaults_valid():
    cfg = load_config()
    assert cfg == PipelineConfig()


def test_precedence(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"seed": 3, "graph": {"c": 0.2}}))
    cfg = load_config(tmp_path / "c.json", preset="acpi", overrides=["graph.c=0.25"], seed=9)
    assert cfg.seed == 9 and cfg.graph.c == 0.25
    assert cfg.model.heads == 4  # from the preset
    assert load_config(tmp_path / "c.json", preset="acpi").graph.c == 0.2


def test_unknown_key_reports_path(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"model": {"hedas": 2}}))
    with pytest.raises(ConfigError) as exc:
        load_config(tmp_path / "c.json")
    assert "model.hedas" in str(exc.value)


def test_negative_c_names_key():
    with pytest.raises(ConfigError) as exc:
        load_config(overrides=["graph.c=-0.1"])
    assert exc.value.key_path == "graph.c"


def test_parse_override():
    assert parse_override("a.b=0.5") == {"a": {"b": 0.5}}
    assert parse_override("a=abc") == {"a": "abc"}
    with pytest.raises(ConfigError):
        parse_override("nokey")


# ----------------------------------------------------------------------- pipeline


def test_run_writes_artifacts_and_is_reproducible(tmp_path):
    cfg = _small_cfg()
    run_pipeline(cfg, tmp_path / "a")
    run_pipeline(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "metrics.json").read_bytes()
    assert a == (tmp_path / "b" / "metrics.json").read_bytes()
    for name in ("config.json", "splits.csv", "model.json", "training_curve.csv"):
        assert (tmp_path / "a" / name).exists()
    assert not (tmp_path / "a" / "INCOMPLETE").exists()
    assert len(os.listdir(tmp_path / "a" / "te")) == 24
    assert len(os.listdir(tmp_path / "a" / "graphs" / "pre")) == 24
    assert json.loads(a)["schema_version"] == "cgb-run/1"


def test_unknown_variant():
    with pytest.raises(UnknownVariant):
        run_pipeline(_small_cfg(), variant="no_everything")


def test_ablation_flags():
    res = run_ablation(_small_cfg(), ("no_csdrf", "no_gconv", "no_caugraph"))
    assert all(not g.rewired for g in res["no_csdrf"].graphs)
    assert res["no_gconv"].pooled_width == 6 * 6
    assert set(res) == {"no_csdrf", "no_gconv", "no_caugraph"}


def test_sweep_rows_and_errors():
    rows = sweep_c(_small_cfg(), (0.05, 0.2, 0.5))
    assert len(rows) == 3 and sum(r.best for r in rows) == 1
    counts = [r.edge_count for r in rows]
    assert counts == sorted(counts, reverse=True)
    with pytest.raises(EmptySweep):
        sweep_c(_small_cfg(), [])
    with pytest.raises(EmptySweep):
        sweep_c(_small_cfg(), [0.3, 0.1])


# ---------------------------------------------------------------------------- CLI


def test_cli_run_smoke(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path / "r"), "--seed", "1", *_small_args()]) == 0
    assert (tmp_path / "r" / "metrics.json").exists()
    assert "F1=" in capsys.readouterr().out


def test_cli_validation_exit_code(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path / "r"), "--set", "graph.c=-1"]) == 1
    assert "graph.c" in capsys.readouterr().err
    assert not (tmp_path / "r").exists()  # nothing computed or written


def test_cli_unknown_config_key(tmp_path, capsys):
    (tmp_path / "c.json").write_text('{"entropy": {"binz": 4}}')
    assert main(["run", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "r")]) == 1
    assert "entropy.binz" in capsys.readouterr().err


def test_cli_skip_rewire(tmp_path):
    assert main(["run", "--skip-rewire", "--out", str(tmp_path / "r"), *_small_args()]) == 0
    cfg = json.loads((tmp_path / "r" / "config.json").read_text())
    assert cfg["rewiring"]["enabled"] is False
    assert not os.listdir(tmp_path / "r" / "graphs" / "post")


def test_cli_missing_manifest(tmp_path, capsys):
    code = main(["run", "--out", str(tmp_path / "r"), "--set", "data.manifest=\"nope.json\""])
    assert code == 1  # bad input, surfaced from the data stage
    assert "data" in capsys.readouterr().err
    assert (tmp_path / "r" / "INCOMPLETE").exists()


def test_cli_ablate_one_variant(tmp_path):
    assert main(["ablate", "--variant", "no_csdrf", "--out", str(tmp_path / "a"), *_small_args()]) == 0
    doc = json.loads((tmp_path / "a" / "ablation.json").read_text())
    assert list(doc) == ["no_csdrf"]
    g = load_graph(next((tmp_path / "a" / "no_csdrf" / "graphs" / "pre").iterdir()))
    assert g.rewired is False


def test_cli_gen_data_round_trip(tmp_path):
    out = tmp_path / "d"
    assert main(["gen-data", "--out", str(out), *_small_args()]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert len(man["samples"]) == 24
    code = main(["run", "--out", str(tmp_path / "r"), *_small_args(), "--set",
                 f"data.manifest={json.dumps(str(out / 'manifest.json'))}"])
    assert code == 0


def test_export_te_heatmap_and_curvature(tmp_path):
    vals = np.full((3, 3), 0.4) * (1 - np.eye(3))
    g = build_adjacency(TEMatrix(vals, channels=("a", "b", "c")), 0.1)
    save_graph(g, tmp_path / "g.json")
    export_artifact(tmp_path / "g.json", "te_heatmap", tmp_path / "te.csv")
    assert np.array_equal(load_te_csv(tmp_path / "te.csv").values, vals)
    assert main(["export", "--graph", str(tmp_path / "g.json"), "--what", "curvature_report",
                 "--out", str(tmp_path / "k.csv")]) == 0
    rows = (tmp_path / "k.csv").read_text().splitlines()[1:]
    assert len(rows) == 3 and all(r.split(",")[2] == "1.5" for r in rows)
    assert np.array_equal(g.adj, complete(3))


def test_export_top_edges_and_log(tmp_path, rng):
    vals = rng.random((10, 10)) * (1 - np.eye(10))
    save_graph(build_adjacency(TEMatrix(vals), 0.0), tmp_path / "g.json")
    export_artifact(tmp_path / "g.json", "edges_topk", tmp_path / "top.csv", fraction=0.05)
    lines = (tmp_path / "top.csv").read_text().splitlines()
    assert lines[0] == "src,dst,te" and len(lines) == 1 + 5
    src, dst = map(int, lines[1].split(",")[:2])
    assert vals[dst, src] == vals.max()
    export_artifact(tmp_path / "g.json", "rewiring_log", tmp_path / "log.jsonl")
    assert (tmp_path / "log.jsonl").read_text() == ""


def test_export_missing(tmp_path):
    with pytest.raises(MissingArtifact):
        export_artifact(tmp_path / "none.json", "te_heatmap", tmp_path / "x.csv")
    assert main(["export", "--graph", str(tmp_path / "none.json"), "--what", "te_heatmap",
                 "--out", str(tmp_path / "x.csv")]) == 1


@pytest.mark.slow
def test_sweep_argmax_below_planted_strength():
    # planted links sit near TE 0.3; the best threshold must keep them
    for seed in range(5):
        rows = sweep_c(load_config(seed=seed))
        best = next(r for r in rows if r.best)
        assert best.c < 0.3, seed
