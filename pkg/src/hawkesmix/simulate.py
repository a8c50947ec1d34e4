"""Exact simulation of multivariate Hawkes processes by Ogata thinning, and the
synthetic clustering suites built on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import BasisSet
from .events import Corpus, EventSequence
from .hawkes import HawkesParams, infectivity, spectral_radius

KINDS = ("sine", "piecewise")
PARAM_RANGE = (math.pi / 5, 2 * math.pi / 5)


class NonStationaryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ImpactFunctionSpec:
    """Parametric ground-truth cluster: base rates plus one impact function per type pair.

    ``sine``: ``b * (1 - cos(omega * (t - s)))`` for ``t >= s``, zero before the delay ``s``.
    ``piecewise``: ``2b * round(sine / 2b)``, i.e. the sine kernel truncated to ``{0, 2b}``.
    """

    kind: str
    mu: np.ndarray  # (C,)
    b: np.ndarray  # (C, C) [target, source]
    omega: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown impact kind {self.kind!r}")
        for name in ("mu", "b", "omega", "s"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def C(self) -> int:
        return self.mu.size

    def impact(self, dt, target=slice(None), source=slice(None)) -> np.ndarray:
        b, w, s = self.b[target, source], self.omega[target, source], self.s[target, source]
        dt = np.asarray(dt, dtype=float)
        val = np.where(dt >= s, b * (1.0 - np.cos(w * (dt - s))), 0.0)
        if self.kind == "piecewise":
            val = 2.0 * b * np.round(val / (2.0 * b))
        return val

    def excitation(self, dt: np.ndarray, src: np.ndarray) -> np.ndarray:
        if dt.size == 0:
            return np.zeros(self.C)
        return self.impact(dt[None, :], source=src).sum(axis=1)

    def excitation_bound(self, dt: np.ndarray, src: np.ndarray) -> np.ndarray:
        # both kinds keep oscillating up to 2b forever once switched on
        if dt.size == 0:
            return np.zeros(self.C)
        return (2.0 * self.b[:, src]).sum(axis=1)

    def with_kind(self, kind: str) -> "ImpactFunctionSpec":
        return ImpactFunctionSpec(kind, self.mu, self.b, self.omega, self.s)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mu": self.mu.tolist(), "b": self.b.tolist(),
                "omega": self.omega.tolist(), "s": self.s.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ImpactFunctionSpec":
        return cls(d["kind"], d["mu"], d["b"], d["omega"], d["s"])


class _BasisKernel:
    """Gaussian-basis impact functions of a :class:`HawkesParams` for the sampler."""

    def __init__(self, params: HawkesParams, basis: BasisSet):
        self.params, self.basis = params, basis
        self.mu = params.mu
        self.A = params.sparse_A()
        # beyond this lag every basis function is below exp(-50)
        self.memory = max(basis.centers) + 10.0 * basis.bandwidth

    def excitation(self, dt, src):
        if dt.size == 0:
            return np.zeros(self.mu.size)
        return np.einsum("cnd,nd->c", self.A[:, src, :], self.basis.g(dt))

    def excitation_bound(self, dt, src):
        if dt.size == 0:
            return np.zeros(self.mu.size)
        return np.einsum("cnd,nd->c", self.A[:, src, :], self.basis.future_max(dt))


def check_stationary(params: HawkesParams, basis: BasisSet) -> float:
    rho = spectral_radius(infectivity(params, basis))
    if not rho < 1.0:
        raise NonStationaryError(f"spectral radius of the infectivity matrix is {rho:.4g} >= 1")
    return rho


def simulate(model, T: float = math.inf, seed=None, basis: BasisSet | None = None,
             max_events: int | None = None, seq_id: str = "sim") -> EventSequence:
    """Draw one sequence on ``[0, T]`` by Ogata's modified thinning.

    ``model`` is either a :class:`HawkesParams` (requires ``basis``) or an
    :class:`ImpactFunctionSpec`. Sampling stops at ``T`` or after ``max_events``
    events; when stopped by the event cap the returned horizon is the last event time.
    """
    if isinstance(model, HawkesParams):
        if basis is None:
            raise ValueError("a BasisSet is required to simulate HawkesParams")
        check_stationary(model, basis)
        kernel = _BasisKernel(model, basis)
        memory = kernel.memory
    else:
        kernel = model
        memory = math.inf
    if not (T > 0):
        raise ValueError("T must be > 0")
    if math.isinf(T) and max_events is None:
        raise ValueError("an infinite horizon needs max_events")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mu = np.asarray(kernel.mu, dtype=float)
    C = mu.size

    times: list[float] = []
    types: list[int] = []
    t_arr = np.empty(0)
    c_arr = np.empty(0, dtype=np.int64)
    first = 0  # events before this index no longer excite anything
    t = 0.0
    while max_events is None or len(times) < max_events:
        if math.isfinite(memory):
            while first < len(times) and t - times[first] > memory:
                first += 1
        dt, src = t - t_arr[first:], c_arr[first:]
        bound = float(np.sum(mu + kernel.excitation_bound(dt, src)))
        t = t + rng.exponential(1.0 / bound)
        if t > T:
            break
        dt = t - t_arr[first:]
        lam = mu + kernel.excitation(dt, src)
        total = float(lam.sum())
        if rng.uniform(0.0, bound) <= total:
            c = int(min(np.searchsorted(np.cumsum(lam), rng.uniform(0.0, total), side="right"),
                        C - 1))
            times.append(t)
            types.append(c)
            t_arr = np.asarray(times)
            c_arr = np.asarray(types, dtype=np.int64)
    horizon = T if math.isfinite(T) else (times[-1] if times else 0.0)
    return EventSequence(seq_id, horizon, times, types)


def draw_cluster_spec(C: int, kind: str, rng: np.random.Generator) -> ImpactFunctionSpec:
    mu = rng.uniform(0.0, 1.0, size=C)
    while np.any(mu <= 0.0):
        mu = np.where(mu > 0, mu, rng.uniform(0.0, 1.0, size=C))
    lo, hi = PARAM_RANGE
    b, omega, s = (rng.uniform(lo, hi, size=(C, C)) for _ in range(3))
    return ImpactFunctionSpec(kind, mu, b, omega, s)


def _fixed_count_sequence(model, M_target: int, rng, seq_id: str, margin: float,
                          basis: BasisSet | None = None) -> EventSequence:
    seq = simulate(model, seed=rng, basis=basis, max_events=M_target, seq_id=seq_id)
    T = seq.T + margin if seq.M else margin
    return EventSequence(seq_id, T, seq.times, seq.types)


@dataclass
class SyntheticSuite:
    corpus: Corpus
    specs: list
    seed: int
    meta: dict

    def ground_truth(self) -> dict:
        return {
            "seed": self.seed,
            **self.meta,
            "clusters": [s.to_dict() for s in self.specs],
            "labels": self.corpus.labels.tolist(),
        }


def make_synthetic_suite(K: int, C: int, n_per_cluster: int, M_target: int, kind: str = "sine",
                         seed: int = 0, margin: float = 1e-3) -> SyntheticSuite:
    """Labelled corpus of ``K * n_per_cluster`` sequences with sine-like or piecewise kernels.

    Cluster parameters come from their own RNG stream, so the two kinds share
    identical ``{b, omega, s}`` draws for the same seed.
    """
    if K < 1 or C < 1 or n_per_cluster < 1 or M_target < 1:
        raise ValueError("K, C, n_per_cluster and M_target must be >= 1")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    param_ss, seq_ss = np.random.SeedSequence(seed).spawn(2)
    prng = np.random.default_rng(param_ss)
    specs = [draw_cluster_spec(C, kind, prng) for _ in range(K)]
    seq_seeds = seq_ss.spawn(K * n_per_cluster)
    seqs, labels = [], []
    for k, spec in enumerate(specs):
        for j in range(n_per_cluster):
            n = k * n_per_cluster + j
            rng = np.random.default_rng(seq_seeds[n])
            seqs.append(_fixed_count_sequence(spec, M_target, rng, f"s{n}", margin))
            labels.append(k)
    corpus = Corpus(C, seqs, labels)
    meta = {"K": K, "C": C, "n_per_cluster": n_per_cluster, "M_target": M_target,
            "kind": kind, "margin": margin,
            "horizon": "simulated until M_target events, T = last event time + margin",
            "stationarity": "not checked: sine/piecewise kernels never decay"}
    return SyntheticSuite(corpus, specs, seed, meta)


def make_basis_suite(params: list, basis: BasisSet, counts: list, M_target: int,
                     seed: int = 0, margin: float = 1e-3) -> Corpus:
    """Labelled corpus from Gaussian-basis clusters, ``counts[k]`` sequences from ``params[k]``."""
    for p in params:
        check_stationary(p, basis)
    seq_seeds = np.random.SeedSequence(seed).spawn(int(sum(counts)))
    seqs, labels, n = [], [], 0
    for k, (p, cnt) in enumerate(zip(params, counts)):
        for _ in range(cnt):
            rng = np.random.default_rng(seq_seeds[n])
            seqs.append(_fixed_count_sequence(p, M_target, rng, f"s{n}", margin, basis))
            labels.append(k)
            n += 1
    return Corpus(params[0].C, seqs, labels)
