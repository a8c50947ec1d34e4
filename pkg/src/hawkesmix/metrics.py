"""Clustering metrics: purity, cross-trial consistency, minor-cluster F1 and K histograms."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True, eq=False)
class Partition:
    """Hard cluster labels over a fixed index set."""

    labels: np.ndarray

    def __init__(self, labels):
        arr = np.asarray(labels)
        if arr.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise ValueError("labels must be integers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("labels must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def K(self) -> int:
        return int(np.unique(self.labels).size)

    def __len__(self) -> int:
        return self.labels.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)


def _labels(p) -> np.ndarray:
    return p.labels if isinstance(p, Partition) else Partition(p).labels


def contingency(predicted, truth) -> np.ndarray:
    """Counts ``|W_k ∩ C_j|`` with rows over predicted clusters and columns over classes."""
    pred, true = _labels(predicted), _labels(truth)
    if pred.size != true.size:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(true, return_inverse=True)
    table = np.zeros((pi.max(initial=-1) + 1, ti.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def purity(predicted, truth) -> float:
    table = contingency(predicted, truth)
    n = table.sum()
    if n == 0:
        raise ValueError("purity of an empty partition is undefined")
    return float(table.max(axis=1).sum() / n)


def _same_cluster_pairs(labels: np.ndarray) -> tuple:
    """Index arrays (i, j), i < j, of all pairs sharing a label."""
    order = np.argsort(labels, kind="stable")
    firsts, seconds = [], []
    _, starts, counts = np.unique(labels[order], return_index=True, return_counts=True)
    for s, c in zip(starts, counts):
        if c < 2:
            continue
        members = np.sort(order[s:s + c])
        i, j = np.triu_indices(c, k=1)
        firsts.append(members[i])
        seconds.append(members[j])
    if not firsts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(firsts), np.concatenate(seconds)


def consistency(trials) -> float:
    """Worst-case (over trials) share of same-cluster pairs kept together in the other trials.

    Returns 1.0 when some trial has no same-cluster pair.
    """
    parts = [_labels(p) for p in trials]
    J = len(parts)
    if J < 2:
        raise ValueError("consistency needs at least two trials")
    if len({p.size for p in parts}) != 1:
        raise ValueError("all trials must cover the same index set")
    worst = 1.0
    for j, p in enumerate(parts):
        i1, i2 = _same_cluster_pairs(p)
        if i1.size == 0:
            return 1.0
        kept = sum(int(np.count_nonzero(q[i1] == q[i2]))
                   for jj, q in enumerate(parts) if jj != j)
        worst = min(worst, kept / ((J - 1) * i1.size))
    return float(worst)


def f1_minor(predicted, truth, minor_class: int) -> float:
    """F1 of ``minor_class`` after Hungarian matching of clusters to classes by overlap."""
    pred, true = _labels(predicted), _labels(truth)
    if pred.size != true.size:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    classes = np.unique(true)
    if minor_class not in classes:
        raise ValueError(f"minor class {minor_class} is absent from the truth labels")
    clusters = np.unique(pred)
    table = contingency(pred, true)
    rows, cols = linear_sum_assignment(table, maximize=True)
    col = int(np.searchsorted(classes, minor_class))
    hit = np.flatnonzero(cols == col)
    if hit.size == 0:
        return 0.0  # more classes than clusters and the minor class went unmatched
    cluster = clusters[rows[hit[0]]]
    tp = int(np.count_nonzero((pred == cluster) & (true == minor_class)))
    if tp == 0:
        return 0.0
    # 2PR / (P + R) with a single rounding
    return float(2 * tp / (np.count_nonzero(pred == cluster) + np.count_nonzero(true == minor_class)))


def k_histogram(reports) -> dict:
    """Final cluster counts across fits; accepts FitReports, dicts with ``K`` or bare ints."""
    reports = list(reports)
    if not reports:
        raise ValueError("k_histogram needs at least one report")
    ks = []
    for r in reports:
        if isinstance(r, dict):
            ks.append(int(r["K"]))
        elif hasattr(r, "K"):
            ks.append(int(r.K))
        else:
            ks.append(int(r))
    return dict(sorted(Counter(ks).items()))


def histogram_mode(hist: dict) -> int:
    # ties resolve to the smaller K
    return min(hist, key=lambda k: (-hist[k], k))


def metric_record(metric: str, value, config=None) -> dict:
    """Flat JSON-ready record."""
    if isinstance(value, dict):
        value = {str(k): v for k, v in value.items()}
    elif isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        value = int(value)
    elif value is not None:
        value = float(value)
    return {"metric": metric, "value": value, "config": dict(config or {})}

