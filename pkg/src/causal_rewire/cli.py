"""Command-line entry point: ``causal-rewire {run,ablate,sweep-c,export,gen-data}``.

Exit codes: 0 success, 1 validation error, 2 runtime stage failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import pipeline
from .config import PRESETS, load_config
from .curvature import curvature_report, save_report_csv
from .entropy import save_te_csv
from .errors import CausalRewireError, MissingArtifact, StageError, ValidationError
from .graph import load_graph, save_edge_list, symmetrized_view, top_fraction_edges
from .signals import generate_synthetic, save_manifest, save_signals

EXPORTS = ("edges_topk", "te_heatmap", "curvature_report", "rewiring_log")


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="dataset preset applied before --config")
    p.add_argument("--seed", type=int, help="global seed (overrides config)")
    p.add_argument("--out", default="runs/latest", help="artifact directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted override, e.g. graph.c=0.05 (repeatable)")
    p.add_argument("--skip-rewire", action="store_true", help="skip the rewiring stage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causal-rewire", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _config_args(sub.add_parser("run", help="full pipeline"))

    p = sub.add_parser("ablate", help="ablation variants on a shared split")
    _config_args(p)
    p.add_argument("--variant", default="all", help="no_caugraph, no_csdrf, no_gconv or all (includes full)")

    p = sub.add_parser("sweep-c", help="sweep the TE threshold c")
    _config_args(p)
    p.add_argument("--values", default=",".join(f"{c:g}" for c in pipeline.DEFAULT_C_GRID),
                   help="comma-separated ascending thresholds")

    p = sub.add_parser("export", help="plot-ready CSV from a saved graph")
    p.add_argument("--graph", required=True, help="graph JSON written by run")
    p.add_argument("--what", required=True, choices=EXPORTS)
    p.add_argument("--fraction", type=float, default=0.01, help="edge fraction for edges_topk")
    p.add_argument("--out", required=True, help="output file")
    p.add_argument("--seed", type=int, help="accepted for uniformity; exports are deterministic")

    p = sub.add_parser("gen-data", help="write a synthetic dataset (CSV signals + manifest)")
    _config_args(p)
    return parser


def _load(args):
    overrides = list(args.overrides)
    if getattr(args, "skip_rewire", False):
        overrides.append("rewiring.enabled=false")
    return load_config(args.config, args.preset, overrides, args.seed)


def _print_metrics(label, res):
    t = res.test
    auc = "n/a" if t.auc is None else f"{t.auc:.4f}"
    print(f"{label}: F1={t.f1:.4f} sens={t.sensitivity:.4f} spec={t.specificity:.4f} AUC={auc}")


def cmd_run(args) -> int:
    cfg = _load(args)
    res = pipeline.run_pipeline(cfg, args.out)
    _print_metrics("test", res)
    print(f"artifacts: {args.out}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _load(args)
    if args.variant == "all":
        variants = pipeline.VARIANTS
    else:
        variants = tuple(v.strip() for v in args.variant.split(","))
    results = pipeline.run_ablation(cfg, variants, args.out)
    for v, res in results.items():
        _print_metrics(v, res)
    return 0


def cmd_sweep_c(args) -> int:
    cfg = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"--values: {exc}") from exc
    rows = pipeline.sweep_c(cfg, values, args.out)
    print("c,edge_count,f1,best")
    for r in rows:
        print(f"{r.c:g},{r.edge_count},{r.f1:.4f},{int(r.best)}")
    return 0


def export_artifact(graph_path, what, out_path, fraction=0.01) -> None:
    if what not in EXPORTS:
        raise ValidationError(f"unknown export {what!r}; choose from {EXPORTS}")
    if not os.path.isfile(graph_path):
        raise MissingArtifact(f"no graph at {graph_path}")
    g = load_graph(graph_path)
    if what == "edges_topk":
        save_edge_list(top_fraction_edges(g, fraction), out_path)
    elif what == "te_heatmap":
        save_te_csv(g.te, out_path)
    elif what == "curvature_report":
        save_report_csv(curvature_report(symmetrized_view(g)), out_path)
    else:
        with open(out_path, "w") as fh:
            for rec in g.rewiring_log:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def cmd_export(args) -> int:
    export_artifact(args.graph, args.what, args.out, args.fraction)
    print(f"wrote {args.out}")
    return 0


def cmd_gen_data(args) -> int:
    cfg = _load(args)
    if cfg.data.manifest:
        raise ValidationError("gen-data writes synthetic data; unset data.manifest")
    ds = generate_synthetic(pipeline.synth_spec(cfg))
    sig_dir = os.path.join(args.out, "signals")
    os.makedirs(sig_dir, exist_ok=True)
    records = []
    for sig, y in ds.samples:
        save_signals(sig, os.path.join(sig_dir, f"{sig.sample_id}.csv"))
        records.append((f"signals/{sig.sample_id}.csv", y))
    save_manifest(os.path.join(args.out, "manifest.json"), records, cfg.seed)
    print(f"wrote {len(records)} samples to {args.out}")
    return 0


COMMANDS = {"run": cmd_run, "ablate": cmd_ablate, "sweep-c": cmd_sweep_c, "export": cmd_export,
            "gen-data": cmd_gen_data}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, ValidationError) else 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CausalRewireError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
