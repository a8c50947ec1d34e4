"""Allocation-strategy comparison: NLL against cumulative inner iterations.

    python3 scripts/run_strategies.py --out results/strategies --trials 5
"""
import argparse
import json
from pathlib import Path

from hawkesmix.experiments import StrategySweepConfig, strategy_sweep
from hawkesmix.io import write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/strategies")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--budget", type=int, default=100)
    ap.add_argument("--K-init", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()
    cfg = StrategySweepConfig(trials=args.trials, budget=args.budget, K_init=args.K_init,
                              seed=args.seed)
    res = strategy_sweep(cfg, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json({"config": cfg.to_dict(), **res}, out / "strategies.json")
    print(json.dumps(res["mean_final"], indent=1))


if __name__ == "__main__":
    main()
