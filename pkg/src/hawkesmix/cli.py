"""``hawkesmix`` command line: simulate, fit, assign, evaluate, sweep, rerun.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or validation failure.
Every command writes its outputs plus a ``manifest.json`` under ``--out``;
``hawkesmix rerun MANIFEST --out DIR`` replays a run from its manifest.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .engine import NumericalError
from .events import Corpus, ValidationError
from .experiments import (F1MapConfig, StrategySweepConfig, default_workers, f1_map,
                          strategy_sweep)
from .inference import FitConfig, assign, fit
from .io import (ParseError, load_corpus, load_labels, load_model, save_corpus, save_labels,
                 save_model, write_json)
from .metrics import (consistency, f1_minor, histogram_mode, k_histogram, metric_record,
                      purity)
from .schedule import STRATEGIES
from .simulate import KINDS, make_synthetic_suite

log = logging.getLogger("hawkesmix")


class UsageError(Exception):
    """Bad flags or inconsistent inputs (exit code 2)."""


# --------------------------------------------------------------------------- helpers

def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, command: str, outputs: list, started: float, extra=None) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out", "workers")}
    return {
        "command": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "inputs": {k: str(Path(v).resolve()) for k, v in cfg.items()
                   if k in ("corpus", "model", "labels", "spec") and v},
        "outputs": sorted(outputs),
        "out": str(Path(args.out).resolve()),
        "wall_clock_seconds": round(time.time() - started, 3),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        **(extra or {}),
    }


def _finish(args, command, outputs, started, extra=None):
    out = Path(args.out)
    write_json(_manifest(args, command, outputs, started, extra), out / "manifest.json")
    print(f"{command}: wrote {', '.join(sorted(outputs))} to {out}")


def _write_csv(path: Path, header: list, rows, notes=()) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        for line in notes:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["nan" if isinstance(x, float) and math.isnan(x) else
                        (repr(x) if isinstance(x, float) else x) for x in row])


def _fit_config(args) -> FitConfig:
    return FitConfig(K_init=args.K_init, budget=args.budget, outer_iters=args.outer_iters,
                     strategy=args.strategy, N_min=args.N_min, mcmc=args.mcmc, seed=args.seed,
                     tol=args.tol, alpha0=args.alpha0, basis_rel_epsilon=args.basis_rel_epsilon,
                     max_basis=args.max_basis)


# --------------------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    started = time.time()
    if min(args.K, args.C, args.n_per_cluster, args.events) < 1:
        raise UsageError("--K, --C, --n-per-cluster and --events must be >= 1")
    suite = make_synthetic_suite(args.K, args.C, args.n_per_cluster, args.events, args.kind,
                                 seed=args.seed, margin=args.margin)
    out = _out_dir(args)
    save_corpus(suite.corpus, out / "corpus.jsonl")
    save_labels(suite.corpus.labels, out / "labels.json")
    write_json(suite.ground_truth(), out / "ground_truth.json")
    _finish(args, "simulate", ["corpus.jsonl", "labels.json", "ground_truth.json"], started)
    return 0


def cmd_fit(args) -> int:
    started = time.time()
    try:
        config = _fit_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    corpus = load_corpus(args.corpus, args.format)
    report = fit(corpus, config)
    out = _out_dir(args)
    save_model(report.model, out / "model.json")
    rep = report.to_dict()
    rep["C"] = corpus.C
    rep["C_inferred"] = corpus.C_inferred
    rep["basis"] = report.model.basis.to_dict()
    write_json(rep, out / "report.json")
    save_labels(report.labels, out / "predictions.json")
    _write_csv(out / "trace.csv", ["outer_iter", "cum_inner", "nll", "K"],
               [(r["iter"], r["cum_inner"], r["nll"], r["K"]) for r in report.trace],
               notes=["outer_iter: outer iteration index (0-based)",
                      "cum_inner: inner iterations spent so far, open-loop probes included",
                      "nll: negative mixture log-likelihood at the expectation point",
                      "K: clusters after pruning and MCMC"])
    _finish(args, "fit", ["model.json", "report.json", "predictions.json", "trace.csv"],
            started, {"final_K": report.K, "final_nll": report.nll})
    return 0


def cmd_assign(args) -> int:
    started = time.time()
    model = load_model(args.model)
    corpus = load_corpus(args.corpus, args.format)
    if corpus.C > model.C:
        raise UsageError(f"corpus has C={corpus.C} but the model was fitted with C={model.C}")
    if corpus.C < model.C:
        corpus = Corpus(model.C, corpus.sequences, corpus.labels)
    labels, resp = assign(model, corpus)
    out = _out_dir(args)
    save_labels(labels, out / "predictions.json")
    _write_csv(out / "responsibilities.csv", ["id"] + [f"r{k}" for k in range(model.K)],
               ([s.id, *row] for s, row in zip(corpus.sequences, resp.r.tolist())))
    _finish(args, "assign", ["predictions.json", "responsibilities.csv"], started)
    return 0


def cmd_evaluate(args) -> int:
    started = time.time()
    preds = [load_labels(p) for p in args.pred or []]
    truth = load_labels(args.labels) if args.labels else None
    if not preds and not args.reports:
        raise UsageError("nothing to evaluate: pass --pred and/or --reports")
    records = []
    sizes = {p.size for p in preds} | ({truth.size} if truth is not None else set())
    if len(sizes) > 1:
        raise UsageError(f"label files disagree in length: {sorted(sizes)}")
    if truth is not None:
        for path, p in zip(args.pred or [], preds):
            records.append(metric_record("purity", purity(p, truth), {"pred": path}))
            if args.minor_class is not None:
                if args.minor_class not in set(truth.tolist()):
                    raise UsageError(f"minor class {args.minor_class} absent from the labels")
                records.append(metric_record("f1_minor", f1_minor(p, truth, args.minor_class),
                                             {"pred": path, "minor_class": args.minor_class}))
    if len(preds) >= 2:
        records.append(metric_record("consistency", consistency(preds),
                                     {"trials": list(args.pred)}))
    if args.reports:
        reps = []
        for path in args.reports:
            with open(path, encoding="utf-8") as fh:
                reps.append(json.load(fh))
        hist = k_histogram(reps)
        records.append(metric_record("k_histogram", hist, {"reports": list(args.reports)}))
        records.append(metric_record("k_mode", histogram_mode(hist),
                                     {"reports": list(args.reports)}))
    if args.threshold is not None:
        for r in records:
            if r["metric"] == "purity":
                r["config"]["threshold"] = args.threshold
                r["config"]["passes"] = bool(r["value"] >= args.threshold)
    out = _out_dir(args)
    write_json(records, out / "metrics.json")
    for r in records:
        print(json.dumps(r, sort_keys=True))
    _finish(args, "evaluate", ["metrics.json"], started)
    return 0


def _config_from(cls, spec: dict):
    names = {f.name for f in fields(cls)}
    unknown = set(spec) - names
    if unknown:
        raise UsageError(f"unknown sweep field(s) {sorted(unknown)} for {cls.__name__}")
    spec = dict(spec)
    for key, val in spec.items():
        if isinstance(val, list) and key != "fit_overrides":
            spec[key] = tuple(val)
    return cls(**spec)


def cmd_sweep(args) -> int:
    started = time.time()
    with open(args.spec, encoding="utf-8") as fh:
        spec = json.load(fh)
    if not isinstance(spec, dict) or spec.get("kind") not in ("strategies", "f1_map"):
        raise UsageError('sweep spec needs "kind": "strategies" or "f1_map"')
    kind = spec.pop("kind")
    if args.seed is not None:
        spec["seed"] = args.seed
    out = _out_dir(args)
    workers = args.workers
    if kind == "strategies":
        cfg = _config_from(StrategySweepConfig, spec)
        res = strategy_sweep(cfg, workers)
        _write_csv(out / "strategy_curves.csv", ["strategy", "cum_inner", "mean_nll", "n_trials"],
                   ((s, cum, nll, n) for s, curve in res["curves"].items()
                    for cum, nll, n in curve),
                   notes=["mean_nll: trial-averaged negative log-likelihood after cum_inner "
                          "inner iterations",
                          "n_trials: trials contributing to the average at that budget"])
        _write_csv(out / "strategy_final.csv", ["strategy", "trial", "final_nll"],
                   ((s, t, v) for s, vals in res["final"].items() for t, v in enumerate(vals)),
                   notes=["final_nll: NLL at the end of the budget; nan marks a failed trial"])
        write_json({"config": cfg.to_dict(), **res}, out / "sweep.json")
        outputs = ["strategy_curves.csv", "strategy_final.csv", "sweep.json"]
    else:
        cfg = _config_from(F1MapConfig, spec)
        rows = f1_map(cfg, workers)
        _write_csv(out / "f1_map.csv", ["cell", "d", "distance", "pi1", "n_minor", "f1"],
                   ((r["cell"], r["d"], r["distance"], r["pi1"], r["n_minor"], r["f1"])
                    for r in rows),
                   notes=["d: step along the unit direction between the generator parameters",
                          "distance: flat Euclidean norm of theta2 - theta1 over (mu, vec(A))",
                          "pi1: share of sequences in the minor cluster (label 0)",
                          f"f1: minor-cluster F1 averaged over {cfg.trials} trials; "
                          "nan marks a failed cell"])
        write_json({"config": cfg.to_dict(), "cells": rows}, out / "f1_map.json")
        outputs = ["f1_map.csv", "f1_map.json"]
    args.sweep_kind = kind
    _finish(args, "sweep", outputs, started)
    return 0


def cmd_rerun(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest.get("command")
    if command not in COMMANDS or command == "rerun":
        raise UsageError(f"manifest names an unknown command {command!r}")
    ns = argparse.Namespace(**manifest["config"])
    ns.out = args.out
    ns.workers = args.workers
    ns.func = COMMANDS[command]
    return ns.func(ns)


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "assign": cmd_assign,
            "evaluate": cmd_evaluate, "sweep": cmd_sweep, "rerun": cmd_rerun}


# --------------------------------------------------------------------------- parser

def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hawkesmix", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a labelled synthetic corpus")
    s.add_argument("--K", type=_positive_int, required=True)
    s.add_argument("--C", type=_positive_int, required=True)
    s.add_argument("--n-per-cluster", type=_positive_int, required=True)
    s.add_argument("--events", type=_positive_int, required=True)
    s.add_argument("--kind", choices=KINDS, default="sine")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--margin", type=float, default=1e-3,
                   help="gap between the last event and the horizon")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit the mixture model")
    f.add_argument("--corpus", required=True)
    f.add_argument("--format", choices=("jsonl", "csv"))
    f.add_argument("--K-init", dest="K_init", type=_positive_int, default=10)
    f.add_argument("--budget", type=_positive_int, default=100, help="total inner iterations")
    f.add_argument("--outer-iters", type=_positive_int)
    f.add_argument("--strategy", choices=STRATEGIES, default="open_loop")
    f.add_argument("--N-min", dest="N_min", type=float, default=1.0)
    f.add_argument("--mcmc", action="store_true")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--tol", type=float)
    f.add_argument("--alpha0", type=float, default=1.0)
    f.add_argument("--basis-rel-epsilon", type=float, default=1e-2)
    f.add_argument("--max-basis", type=_positive_int)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    a = sub.add_parser("assign", help="label sequences with a fitted model")
    a.add_argument("--model", required=True)
    a.add_argument("--corpus", required=True)
    a.add_argument("--format", choices=("jsonl", "csv"))
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_assign)

    e = sub.add_parser("evaluate", help="purity, consistency, minor F1, K histogram")
    e.add_argument("--labels", help="ground-truth labels JSON")
    e.add_argument("--pred", nargs="+", help="prediction JSON files; two or more add consistency")
    e.add_argument("--reports", nargs="+", help="fit report JSON files for the K histogram")
    e.add_argument("--minor-class", type=int)
    e.add_argument("--threshold", type=float, help="flag purity against this value")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("sweep", help="strategy sweep or minor-cluster F1 map")
    w.add_argument("--spec", required=True, help='JSON with "kind": "strategies" | "f1_map"')
    w.add_argument("--seed", type=int, help="override the spec's master seed")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("rerun", help="replay a run from its manifest")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rerun)

    for sp in (w, r):
        sp.add_argument("--workers", type=_positive_int, default=None,
                        help="worker processes (default: $HAWKESMIX_WORKERS or 1)")
    return p


_PATH_ARGS = ("corpus", "model", "labels", "spec", "pred", "reports", "manifest")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for key in _PATH_ARGS:
        val = getattr(args, key, None)
        if isinstance(val, str):
            setattr(args, key, str(Path(val).resolve()))
        elif isinstance(val, list):
            setattr(args, key, [str(Path(v).resolve()) for v in val])
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", None) is None and args.command in ("sweep", "rerun"):
        try:
            args.workers = default_workers()
        except ValueError as exc:
            print(f"hawkesmix: error: {exc}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (UsageError, ValidationError, ParseError, FileNotFoundError) as exc:
        print(f"hawkesmix {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, ValueError, OSError) as exc:
        print(f"hawkesmix {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
