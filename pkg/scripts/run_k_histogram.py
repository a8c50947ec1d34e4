"""Histogram of the final cluster count with pruning and MCMC moves enabled.

    python3 scripts/run_k_histogram.py --seeds 5 --K-init 10
"""
import argparse

from hawkesmix.inference import FitConfig, fit
from hawkesmix.metrics import histogram_mode, k_histogram
from hawkesmix.simulate import make_synthetic_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--K-init", type=int, default=10)
    ap.add_argument("--no-mcmc", action="store_true")
    args = ap.parse_args()
    reports = []
    for s in range(args.seeds):
        suite = make_synthetic_suite(args.K, 5, 100, 50, "sine", seed=s)
        reports.append(fit(suite.corpus, FitConfig(K_init=args.K_init, seed=s,
                                                   mcmc=not args.no_mcmc)))
        print(f"seed {s}: K = {reports[-1].K}")
    hist = k_histogram(reports)
    print(f"histogram {hist}, mode {histogram_mode(hist)}")


if __name__ == "__main__":
    main()
