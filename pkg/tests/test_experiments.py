import math

import numpy as np
import pytest

from hawkesmix.experiments import (F1MapConfig, StrategySweepConfig, _f1_cell, cell_seed,
                                   default_workers, f1_map, run_cells, strategy_sweep)
from hawkesmix.inference import FitConfig, fit
from hawkesmix.metrics import f1_minor
from hawkesmix.simulate import make_basis_suite


def _square(x):
    if x == 3:
        raise RuntimeError("bad cell")
    return {"v": x * x}


def test_cell_seed_properties():
    assert cell_seed(0, 1, 2) == cell_seed(0, 1, 2)
    seeds = {cell_seed(0, i, j) for i in range(8) for j in range(8)}
    assert len(seeds) == 64
    assert cell_seed(1, 1, 2) != cell_seed(0, 1, 2)
    assert cell_seed(0, 1, 2) != cell_seed(0, 2, 1)


def test_run_cells_order_and_errors():
    one = run_cells(_square, list(range(6)), workers=1)
    two = run_cells(_square, list(range(6)), workers=2)
    assert one == two
    assert one[3]["error"].startswith("RuntimeError")
    assert [r.get("v") for r in one] == [0, 1, 4, None, 16, 25]


def test_default_workers(monkeypatch):
    monkeypatch.delenv("HAWKESMIX_WORKERS", raising=False)
    assert default_workers() == 1
    monkeypatch.setenv("HAWKESMIX_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("HAWKESMIX_WORKERS", "x")
    with pytest.raises(ValueError):
        default_workers()


def test_f1_cell_equals_direct_fit():
    cfg = F1MapConfig(n_sequences=30, events=15, trials=1, budget=10, max_basis=4)
    res = _f1_cell((cfg.to_dict(), 7, 7))
    params, dist = cfg.cluster_params(cfg.d_values[7])
    seed = cell_seed(cfg.seed, 7, 7, 0)
    n1 = round(cfg.pi_values[7] * 30)
    corpus = make_basis_suite(params, cfg.generator_basis(), [n1, 30 - n1], 15, seed=seed)
    rep = fit(corpus, FitConfig(K_init=2, budget=10, seed=seed, max_basis=4))
    assert res["f1"] == f1_minor(rep.labels, corpus.labels, 0)
    assert res["distance"] == pytest.approx(cfg.d_values[7], rel=1e-12)
    assert res["n_minor"] == n1


def test_f1_map_grid_shape_and_worker_independence():
    cfg = F1MapConfig(n_sequences=20, events=10, trials=1, budget=6, max_basis=3,
                      d_values=(0.2, 0.8), pi_values=(0.1, 0.4))
    a = f1_map(cfg, workers=1)
    b = f1_map(cfg, workers=2)
    assert a == b
    assert [(r["i"], r["j"]) for r in a] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(0.0 <= r["f1"] <= 1.0 for r in a)


def test_f1_map_defaults():
    cfg = F1MapConfig()
    assert len(cfg.d_values) == 8 and len(cfg.pi_values) == 8
    assert cfg.pi_values[-1] == 0.4
    params, dist = cfg.cluster_params(0.5)
    assert dist == pytest.approx(0.5)
    assert params[0].D == cfg.generator_basis().D == 4


def test_strategy_sweep_small():
    cfg = StrategySweepConfig(C=2, n_per_cluster=4, events=8, budget=8, trials=2,
                              strategies=("constant", "open_loop"),
                              fit_overrides={"max_basis": 3, "outer_iters": 4})
    res = strategy_sweep(cfg, workers=1)
    assert set(res["final"]) == {"constant", "open_loop"}
    assert all(len(v) == 2 for v in res["final"].values())
    assert not res["errors"]
    assert res["max_row_error"] <= 1e-12
    for s, curve in res["curves"].items():
        cums = [c for c, _, _ in curve]
        assert cums == sorted(cums) and cums[-1] == 8
        assert math.isclose(res["mean_final"][s], np.mean(res["final"][s]))


def test_strategy_sweep_rejects_unknown():
    with pytest.raises(ValueError):
        strategy_sweep(StrategySweepConfig(strategies=("nope",)))
