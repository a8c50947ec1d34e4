"""Allocation of a fixed inner-iteration budget across outer iterations."""
from __future__ import annotations

import numpy as np

STRATEGIES = ("constant", "increasing", "decreasing", "open_loop")


def _ramp(lo: float, hi: float, n: int, power: float) -> np.ndarray:
    if n == 1:
        return np.array([float(lo)])
    x = np.linspace(0.0, 1.0, n) ** power
    return lo + (hi - lo) * x


def _integer_ramp(lo: int, hi: int, n: int, budget: int) -> list[int]:
    """Non-decreasing integers from ``lo`` to ``hi`` summing to ``budget``.

    A linear ramp when its sum already matches; otherwise the ramp is bent
    (``x**p``) until it does, then rounded with a common offset.
    """
    if n == 1:
        return [budget]
    if not (lo * (n - 1) + hi <= budget <= lo + hi * (n - 1)):
        raise ValueError(f"budget {budget} unreachable by a {lo}..{hi} ramp over {n} iterations")
    p_lo, p_hi = 1e-3, 1e3
    power = 1.0
    if abs(_ramp(lo, hi, n, 1.0).sum() - budget) > 1e-9:
        # sum decreases as the power grows
        for _ in range(200):
            power = np.sqrt(p_lo * p_hi)
            if _ramp(lo, hi, n, power).sum() > budget:
                p_lo = power
            else:
                p_hi = power
    x = _ramp(lo, hi, n, power)
    # pick the rounding offset that lands closest to the budget from below
    counts = np.floor(x + 0.5).astype(int)
    best = None
    for delta in np.unique(np.concatenate([[0.0], 1.0 - (x - np.floor(x))])):
        c = np.floor(x + delta - 1e-12).astype(int)
        c[0], c[-1] = lo, hi
        if c.sum() <= budget and (best is None or c.sum() > best.sum()):
            best = c
    counts = best if best is not None else counts
    counts = np.maximum.accumulate(np.minimum(counts, hi))
    missing = budget - int(counts.sum())
    # fill the remainder by raising interior entries from the right
    while missing > 0:
        for i in range(n - 2, 0, -1):
            if missing and counts[i] < counts[i + 1]:
                counts[i] += 1
                missing -= 1
        if missing and not any(counts[i] < counts[i + 1] for i in range(n - 2, 0, -1)):
            raise ValueError("could not distribute the inner budget")
    while missing < 0:
        for i in range(1, n - 1):
            if missing and counts[i] > counts[i - 1]:
                counts[i] -= 1
                missing += 1
        if missing and not any(counts[i] > counts[i - 1] for i in range(1, n - 1)):
            raise ValueError("could not distribute the inner budget")
    return [int(c) for c in counts]


def allocation_schedule(strategy: str, total_budget: int, outer_count: int,
                        lo: int | None = None, hi: int | None = None) -> list[int] | None:
    """Inner iterations per outer iteration; ``None`` for the adaptive open-loop strategy."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if strategy == "open_loop":
        return None
    if outer_count < 1 or total_budget < outer_count:
        raise ValueError("infeasible schedule: need total_budget >= outer_count >= 1")
    if strategy == "constant":
        base, extra = divmod(total_budget, outer_count)
        # any remainder goes to the last iterations
        return [base + (1 if i >= outer_count - extra else 0) for i in range(outer_count)]
    mean = total_budget / outer_count
    if lo is None or hi is None:
        lo = max(1, int(round(0.4 * mean)))
        hi = max(lo, int(round(2 * mean - lo)))
    lo, hi = min(lo, hi), max(lo, hi)
    ramp = _integer_ramp(lo, hi, outer_count, total_budget)
    return ramp if strategy == "increasing" else ramp[::-1]
