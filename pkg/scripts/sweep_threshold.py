#!/usr/bin/env python3
"""Sweep the TE threshold c over several seeds and print edge counts and F1."""
import argparse

from causal_rewire.config import load_config
from causal_rewire.pipeline import DEFAULT_C_GRID, sweep_c


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--values", type=float, nargs="+", default=list(DEFAULT_C_GRID))
    ap.add_argument("--config")
    ap.add_argument("--set", dest="overrides", action="append", default=[])
    args = ap.parse_args()

    print("seed,c,edge_count,f1,best")
    for seed in args.seeds:
        cfg = load_config(args.config, overrides=args.overrides, seed=seed)
        for r in sweep_c(cfg, args.values):
            print(f"{seed},{r.c:g},{r.edge_count},{r.f1:.4f},{int(r.best)}")


if __name__ == "__main__":
    main()
