"""End-to-end orchestration: signals -> TE -> causal graph -> rewiring -> GCN -> metrics.

Artifact layout of a run directory::

    config.json            resolved configuration
    splits.csv             sample_id,label,split
    te/<id>.csv            TE matrix per sample (row = effect)
    graphs/pre/<id>.json   thresholded causal graph
    graphs/post/<id>.json  rewired graph (only when rewiring ran)
    rewire_logs/<id>.jsonl one record per rewiring iteration
    model.json             best checkpoint
    training_curve.csv
    metrics.json
    INCOMPLETE             present until the run finishes
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import gnn
from .config import PipelineConfig
from .entropy import TEMatrix, save_te_csv, te_matrix
from .errors import CausalRewireError, EmptySweep, StageError, UnknownVariant
from .graph import CausalGraph, build_adjacency, save_graph
from .rewiring import RewireConfig, rewire
from .signals import (
    LabeledDataset,
    SynthSpec,
    chain_coupling,
    generate_synthetic,
    hub_coupling,
    load_manifest,
    split_dataset,
)

log = logging.getLogger(__name__)

VARIANTS = ("full", "no_caugraph", "no_csdrf", "no_gconv")
DEFAULT_C_GRID = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
RUN_SCHEMA = "cgb-run/1"

_TOPOLOGIES = {"chain": chain_coupling, "hub": hub_coupling}


@dataclass
class RunResult:
    variant: str
    test: gnn.EvalMetrics
    val: gnn.EvalMetrics
    epochs: int
    edge_count_pre: int
    edge_count_post: int
    graphs: list = field(default_factory=list, repr=False)
    pooled_width: int = 0

    def report(self) -> dict:
        return {
            "schema_version": RUN_SCHEMA,
            "variant": self.variant,
            "test": self.test.to_dict(),
            "val": self.val.to_dict(),
            "epochs": self.epochs,
            "edge_count_pre": self.edge_count_pre,
            "edge_count_post": self.edge_count_post,
            "pooled_width": self.pooled_width,
        }


class _stage:
    """Re-raise anything escaping a block as ``StageError(name)``."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, et, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, (CausalRewireError, ValueError,
                                                                                      OSError, ArithmeticError)):
            raise StageError(self.name, exc) from exc
        return False


def synth_spec(cfg: PipelineConfig) -> SynthSpec:
    s = cfg.data.synthetic
    couplings = [_TOPOLOGIES[name](s.n, s.coupling, s.self_weight) for name in s.topologies]
    return SynthSpec(s.n, s.t, couplings, s.noise_std, cfg.seed, s.n_samples)


def load_dataset(cfg: PipelineConfig) -> LabeledDataset:
    if cfg.data.manifest:
        ds, _ = load_manifest(cfg.data.manifest)
    else:
        ds = generate_synthetic(synth_spec(cfg))
    return split_dataset(ds, cfg.seed)


def compute_te(ds: LabeledDataset, cfg: PipelineConfig) -> list[TEMatrix]:
    e = cfg.entropy
    return [te_matrix(sig, e.bins, e.q, e.o) for sig, _ in ds.samples]


def correlation_graph(sig, c_corr: float) -> CausalGraph:
    """Thresholded |Pearson r| graph; features are the signed correlations, diagonal zeroed."""
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.corrcoef(sig.values)
    r = np.nan_to_num(r)
    np.fill_diagonal(r, 0.0)
    wrapped = TEMatrix(np.abs(r), (0, 0), 0, sig.channels)
    g = build_adjacency(wrapped, c_corr)
    g.features = r
    return g


def _sample_seed(seed: int, idx: int) -> int:
    return int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])


def rewire_config(cfg: PipelineConfig, seed: int) -> RewireConfig:
    r = cfg.rewiring
    return RewireConfig(r.tau, r.max_iterations, r.c_plus, r.c_minus, seed, r.curvature_floor)


def build_graphs(ds, tes, cfg: PipelineConfig, variant: str = "full"):
    """Return ``(pre, post, logs)`` graph lists for the given ablation variant."""
    if variant not in VARIANTS:
        raise UnknownVariant(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if variant == "no_caugraph":
        pre = [correlation_graph(sig, cfg.graph.c_corr) for sig, _ in ds.samples]
        return pre, pre, [None] * len(pre)
    pre = [build_adjacency(te, cfg.graph.c) for te in tes]
    if variant == "no_csdrf" or not cfg.rewiring.enabled:
        return pre, pre, [None] * len(pre)
    post, logs = [], []
    for idx, (g, te) in enumerate(zip(pre, tes)):
        if g.edge_count == 0:
            post.append(g)
            logs.append(None)
            continue
        g2, lg = rewire(g, te, rewire_config(cfg, _sample_seed(cfg.seed, idx)))
        post.append(g2)
        logs.append(lg)
    return pre, post, logs


def model_config(cfg: PipelineConfig, variant: str = "full") -> gnn.ModelConfig:
    m = cfg.model
    return gnn.ModelConfig(m.layer_sizes, m.heads, m.dropout_rate, m.fc_hidden_1, m.fc_hidden_2,
                           m.layer_activation, use_gconv=variant != "no_gconv", seed=cfg.seed)


def train_config(cfg: PipelineConfig) -> gnn.TrainConfig:
    t = cfg.train
    return gnn.TrainConfig(t.lr, t.batch_size, t.max_epochs, t.patience)


def fit_and_score(graph_ds: LabeledDataset, cfg: PipelineConfig, variant: str = "full"):
    state, curve = gnn.train(graph_ds.subset("train"), graph_ds.subset("val"), model_config(cfg, variant),
                             train_config(cfg))
    return state, curve, gnn.evaluate(state, graph_ds.subset("val")), gnn.evaluate(state, graph_ds.subset("test"))


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def run_pipeline(cfg: PipelineConfig, out_dir=None, variant: str = "full", ds=None, tes=None) -> RunResult:
    """Run all stages. ``ds``/``tes`` may be passed in to reuse TE work across runs."""
    if variant not in VARIANTS:
        raise UnknownVariant(f"unknown variant {variant!r}; choose from {VARIANTS}")
    marker = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        marker = os.path.join(out_dir, "INCOMPLETE")
        with open(marker, "w") as fh:
            fh.write("run started; artifacts in this directory are partial\n")
        _write_json(os.path.join(out_dir, "config.json"), {"variant": variant, **cfg.to_dict()})

    with _stage("data"):
        if ds is None:
            ds = load_dataset(cfg)
        elif ds.split_tags is None:
            ds = split_dataset(ds, cfg.seed)
    with _stage("entropy"):
        if tes is None and variant != "no_caugraph":
            tes = compute_te(ds, cfg)
    with _stage("graph"):
        pre, post, logs = build_graphs(ds, tes, cfg, variant)
    with _stage("model"):
        graph_ds = LabeledDataset([(g, y) for g, (_, y) in zip(post, ds.samples)], ds.split_tags)
        state, curve, val_m, test_m = fit_and_score(graph_ds, cfg, variant)

    width = state.params["fc1.weight"].shape[0]
    result = RunResult(variant, test_m, val_m, len(curve), sum(g.edge_count for g in pre),
                       sum(g.edge_count for g in post), post, width)

    if out_dir is not None:
        with _stage("artifacts"):
            _write_artifacts(out_dir, ds, tes, pre, post, logs, state, curve, result)
        os.remove(marker)
    return result


def _write_artifacts(out_dir, ds, tes, pre, post, logs, state, curve, result):
    ids = [sig.sample_id or f"s{k:04d}" for k, (sig, _) in enumerate(ds.samples)]
    with open(os.path.join(out_dir, "splits.csv"), "w") as fh:
        fh.write("sample_id,label,split\n")
        for sid, (_, y), tag in zip(ids, ds.samples, ds.split_tags):
            fh.write(f"{sid},{y},{tag}\n")
    for sub in ("te", "graphs/pre", "graphs/post", "rewire_logs"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    for k, sid in enumerate(ids):
        if tes is not None:
            save_te_csv(tes[k], os.path.join(out_dir, "te", f"{sid}.csv"))
        save_graph(pre[k], os.path.join(out_dir, "graphs/pre", f"{sid}.json"))
        if post[k] is not pre[k]:
            save_graph(post[k], os.path.join(out_dir, "graphs/post", f"{sid}.json"))
        if logs[k] is not None:
            logs[k].save_jsonl(os.path.join(out_dir, "rewire_logs", f"{sid}.jsonl"))
    gnn.save_checkpoint(state, os.path.join(out_dir, "model.json"))
    gnn.save_curve_csv(curve, os.path.join(out_dir, "training_curve.csv"))
    _write_json(os.path.join(out_dir, "metrics.json"), result.report())


# ------------------------------------------------------------------ experiments


def run_ablation(cfg: PipelineConfig, variants=VARIANTS, out_dir=None) -> dict[str, RunResult]:
    """Run each variant on the same data and split; TE is computed once."""
    for v in variants:
        if v not in VARIANTS:
            raise UnknownVariant(f"unknown variant {v!r}; choose from {VARIANTS}")
    with _stage("data"):
        ds = load_dataset(cfg)
    with _stage("entropy"):
        tes = compute_te(ds, cfg)
    results = {}
    for v in variants:
        sub = os.path.join(out_dir, v) if out_dir else None
        results[v] = run_pipeline(cfg, sub, v, ds=ds, tes=tes)
    if out_dir:
        _write_json(os.path.join(out_dir, "ablation.json"), {v: r.report() for v, r in results.items()})
    return results


@dataclass
class SweepRow:
    c: float
    edge_count: int
    f1: float
    best: bool = False


def sweep_c(cfg: PipelineConfig, values=DEFAULT_C_GRID, out_dir=None) -> list[SweepRow]:
    """One full run per threshold on a shared dataset, split and seed."""
    values = list(values)
    if not values:
        raise EmptySweep("no threshold values given")
    if any(v <= 0 for v in values) or values != sorted(values):
        raise EmptySweep("threshold values must be positive and ascending")
    with _stage("data"):
        ds = load_dataset(cfg)
    with _stage("entropy"):
        tes = compute_te(ds, cfg)
    rows = []
    for c in values:
        run_cfg = _with_c(cfg, c)
        res = run_pipeline(run_cfg, None, "full", ds=ds, tes=tes)
        rows.append(SweepRow(c, res.edge_count_pre, res.test.f1))
    best = max(range(len(rows)), key=lambda k: rows[k].f1)
    rows[best].best = True
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        save_sweep_csv(rows, os.path.join(out_dir, "sweep_c.csv"))
    return rows


def _with_c(cfg: PipelineConfig, c: float) -> PipelineConfig:
    return replace(cfg, graph=replace(cfg.graph, c=float(c)))


def save_sweep_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("c,edge_count,f1,best\n")
        for r in rows:
            fh.write(f"{r.c:g},{r.edge_count},{r.f1:.12g},{int(r.best)}\n")

