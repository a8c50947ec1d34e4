"""Desk-scale experiment grids: allocation-strategy sweeps and the minor-cluster F1 map.

Each grid cell gets its own seed derived from the master seed and the cell
coordinates, so results do not depend on execution order or worker count.
Cells run in worker processes and are merged by cell index.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import build_basis
from .hawkes import HawkesParams
from .inference import FitConfig, fit
from .metrics import f1_minor
from .schedule import STRATEGIES
from .simulate import make_basis_suite, make_synthetic_suite

WORKERS_ENV = "HAWKESMIX_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None


def cell_seed(master: int, *coords: int) -> int:
    """Seed for one grid cell: the master seed hashed with the cell coordinates."""
    return int(np.random.SeedSequence([int(master), *map(int, coords)]).generate_state(1)[0])


def run_cells(func, tasks: list, workers: int | None = None) -> list:
    """``[func(t) for t in tasks]``, optionally across processes; order is preserved.

    A cell that raises yields ``{"error": message}`` instead of aborting the grid.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(tasks) <= 1:
        return [_guarded(func, t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = [pool.submit(_guarded, func, t) for t in tasks]
        return [f.result() for f in futures]


def _guarded(func, task):
    try:
        return func(task)
    except Exception as exc:  # noqa: BLE001 - a failed cell becomes NaN, the grid goes on
        return {"error": f"{type(exc).__name__}: {exc}"}


# --------------------------------------------------------------------------- strategies

@dataclass
class StrategySweepConfig:
    K: int = 2
    C: int = 5
    n_per_cluster: int = 100
    events: int = 50
    kind: str = "sine"
    strategies: tuple = STRATEGIES
    budget: int = 100
    trials: int = 5
    K_init: int = 2
    seed: int = 0
    fit_overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategies"] = list(self.strategies)
        return d


def _strategy_cell(task):
    cfg, strategy, trial = task
    suite = make_synthetic_suite(cfg["K"], cfg["C"], cfg["n_per_cluster"], cfg["events"],
                                 cfg["kind"], seed=cfg["seed"])
    fc = FitConfig(**{"K_init": cfg["K_init"], "budget": cfg["budget"], "strategy": strategy,
                      "seed": cell_seed(cfg["seed"], STRATEGIES.index(strategy), trial),
                      **cfg["fit_overrides"]})
    report = fit(suite.corpus, fc)
    return {"trace": [(r["cum_inner"], r["nll"], r["K"]) for r in report.trace],
            "nll": report.nll, "max_row_error": report.max_row_error}


def strategy_sweep(cfg: StrategySweepConfig, workers: int | None = None) -> dict:
    """Final NLL per (strategy, trial) and trial-averaged NLL-vs-cumulative-inner curves.

    All trials share one corpus; trials differ in the fit seed only.
    """
    for s in cfg.strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    base = cfg.to_dict()
    tasks = [(base, s, t) for s in cfg.strategies for t in range(cfg.trials)]
    results = run_cells(_strategy_cell, tasks, workers)
    out = {"final": {}, "curves": {}, "errors": [], "max_row_error": 0.0}
    for (_, s, t), res in zip(tasks, results):
        if "error" in res:
            out["errors"].append({"strategy": s, "trial": t, "error": res["error"]})
            out["final"].setdefault(s, []).append(math.nan)
            continue
        out["final"].setdefault(s, []).append(res["nll"])
        out["max_row_error"] = max(out["max_row_error"], res["max_row_error"])
        curve = out["curves"].setdefault(s, {})
        for cum, nll, _ in res["trace"]:
            curve.setdefault(cum, []).append(nll)
    out["mean_final"] = {s: float(np.mean(v)) for s, v in out["final"].items()}
    out["curves"] = {s: sorted((cum, float(np.mean(v)), len(v)) for cum, v in c.items())
                     for s, c in out["curves"].items()}
    return out


# --------------------------------------------------------------------------- F1 map

@dataclass
class F1MapConfig:
    """Binary one-dimensional problem: a minor cluster ``theta1`` and ``theta2 = theta1 + d * u``.

    ``theta = (mu, a_1..a_D)`` on a fixed generator basis; ``u`` is a unit vector,
    so ``d`` is the flat Euclidean distance between the generator parameters.
    """

    n_sequences: int = 200
    events: int = 50
    d_values: tuple = tuple(np.linspace(0.1, 0.8, 8).round(6))
    pi_values: tuple = tuple(np.linspace(0.05, 0.4, 8).round(6))
    base_mu: float = 0.4
    base_A: tuple = (0.25, 0.1, 0.0, 0.0)
    direction: tuple = (1.0, 0.2, 0.2, 0.0, 0.0)
    generator_T: float = 8.0
    K_init: int = 2
    budget: int = 60
    max_basis: int = 8
    trials: int = 3  # F1 is averaged over independent corpora per cell
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("d_values", "pi_values", "base_A", "direction"):
            d[key] = [float(x) for x in d[key]]
        return d

    def generator_basis(self):
        D = len(self.base_A)
        return build_basis(self.generator_T, D * math.pi / self.generator_T * (1 - 1e-12))

    def cluster_params(self, d: float):
        u = np.asarray(self.direction, dtype=float)
        u = u / np.linalg.norm(u)
        theta1 = np.concatenate([[self.base_mu], self.base_A])
        theta2 = theta1 + d * u
        as_params = [HawkesParams([t[0]], np.asarray(t[1:]).reshape(1, 1, -1))
                     for t in (theta1, theta2)]
        return as_params, float(np.linalg.norm(theta2 - theta1))


def _f1_cell(task):
    cfg, i, j = task
    conf = F1MapConfig(**{**cfg, "d_values": tuple(cfg["d_values"]),
                          "pi_values": tuple(cfg["pi_values"]),
                          "base_A": tuple(cfg["base_A"]), "direction": tuple(cfg["direction"])})
    d, pi1 = conf.d_values[i], conf.pi_values[j]
    params, dist = conf.cluster_params(d)
    n1 = max(1, int(round(pi1 * conf.n_sequences)))
    counts = [n1, conf.n_sequences - n1]
    f1s, ks, nlls, row_err = [], [], [], 0.0
    for t in range(conf.trials):
        seed = cell_seed(conf.seed, i, j, t)
        corpus = make_basis_suite(params, conf.generator_basis(), counts, conf.events, seed=seed)
        fc = FitConfig(K_init=conf.K_init, budget=conf.budget, seed=seed,
                       max_basis=conf.max_basis)
        report = fit(corpus, fc)
        f1s.append(f1_minor(report.labels, corpus.labels, 0))
        ks.append(report.K)
        nlls.append(report.nll)
        row_err = max(row_err, report.max_row_error)
    return {"d": float(d), "distance": dist, "pi1": float(pi1), "n_minor": n1,
            "f1": float(np.mean(f1s)), "f1_trials": f1s, "K_trials": ks, "nll_trials": nlls,
            "max_row_error": row_err}


def f1_map(cfg: F1MapConfig, workers: int | None = None) -> list:
    """One record per (d, pi1) cell in row-major (d, pi1) order; failed cells carry NaN."""
    base = cfg.to_dict()
    tasks = [(base, i, j) for i in range(len(cfg.d_values)) for j in range(len(cfg.pi_values))]
    rows = []
    for (_, i, j), res in zip(tasks, run_cells(_f1_cell, tasks, workers)):
        if "error" in res:
            res = {"d": float(cfg.d_values[i]), "distance": math.nan,
                   "pi1": float(cfg.pi_values[j]), "n_minor": math.nan, "f1": math.nan,
                   "f1_trials": [], "K_trials": [], "nll_trials": [], "max_row_error": math.nan,
                   "note": res["error"]}
        rows.append({"cell": len(rows), "i": i, "j": j, **res})
    return rows
