"""Minor-cluster F1 over the (d, pi1) grid; prints the grid with d down the rows.

    python3 scripts/run_f1_map.py --out results/f1_map
"""
import argparse
from pathlib import Path

import numpy as np

from hawkesmix.experiments import F1MapConfig, f1_map
from hawkesmix.io import write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/f1_map")
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--n-sequences", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()
    cfg = F1MapConfig(trials=args.trials, n_sequences=args.n_sequences, seed=args.seed)
    rows = f1_map(cfg, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json({"config": cfg.to_dict(), "cells": rows}, out / "f1_map.json")
    grid = np.full((len(cfg.d_values), len(cfg.pi_values)), np.nan)
    for r in rows:
        grid[r["i"], r["j"]] = r["f1"]
    print("d \\ pi1 " + " ".join(f"{p:5.2f}" for p in cfg.pi_values))
    for d, line in zip(cfg.d_values, grid):
        print(f"{d:7.2f} " + " ".join(f"{v:5.2f}" for v in line))


if __name__ == "__main__":
    main()
