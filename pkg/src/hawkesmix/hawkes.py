"""Multivariate Hawkes process with Gaussian-basis impact functions.

``lambda_c(t) = mu_c + sum_{t_i < t} sum_d A[c, c_i, d] * g_d(t - t_i)``
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet
from .events import EventSequence

# coefficients below this are treated as exact zeros in history sums
SPARSITY_EPS = 1e-10


@dataclass(frozen=True, eq=False)
class HawkesParams:
    mu: np.ndarray  # (C,)
    A: np.ndarray  # (C, C, D): A[target, source, basis]

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        A = np.array(self.A, dtype=float)
        C = mu.size
        if A.ndim != 3 or A.shape[:2] != (C, C):
            raise ValueError(f"A must have shape (C, C, D) with C={C}, got {A.shape}")
        if not np.all(mu > 0):
            raise ValueError("base intensities must be strictly positive")
        if not np.all(A >= 0):
            raise ValueError("impact coefficients must be non-negative")
        mu.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "A", A)

    @property
    def C(self) -> int:
        return self.mu.size

    @property
    def D(self) -> int:
        return self.A.shape[2]

    def sparse_A(self) -> np.ndarray:
        return np.where(self.A < SPARSITY_EPS, 0.0, self.A)


def _history_excitation(A: np.ndarray, basis: BasisSet, dt: np.ndarray,
                        src: np.ndarray) -> np.ndarray:
    """Summed excitation on every target type from events at lags ``dt`` with types ``src``."""
    if dt.size == 0:
        return np.zeros(A.shape[0])
    g = basis.g(dt)  # (n, D)
    return np.einsum("cnd,nd->c", A[:, src, :], g)


def intensity(params: HawkesParams, basis: BasisSet, seq: EventSequence, t: float,
              c: int | None = None):
    """Conditional intensity at time ``t`` given events strictly before ``t``.

    Returns the full length-C vector when ``c`` is None.
    """
    past = seq.times < t
    lam = params.mu + _history_excitation(params.sparse_A(), basis, t - seq.times[past],
                                          seq.types[past])
    return lam if c is None else float(lam[c])


def event_intensities(params: HawkesParams, basis: BasisSet, seq: EventSequence) -> np.ndarray:
    """``lambda_{c_i}(t_i)`` for every event, with history ``j < i`` by position."""
    M = seq.M
    if M == 0:
        return np.empty(0)
    A = params.sparse_A()
    t, c = seq.times, seq.types
    tau = t[:, None] - t[None, :]
    mask = np.tril(np.ones((M, M), dtype=bool), k=-1)
    g = basis.g(np.where(mask, tau, 0.0)) * mask[..., None]  # (M, M, D)
    coef = A[c[:, None], c[None, :], :]  # (M, M, D)
    return params.mu[c] + np.einsum("ijd,ijd->i", coef, g)


def compensator(params: HawkesParams, basis: BasisSet, seq: EventSequence,
                t: float | None = None) -> np.ndarray:
    """``int_0^t lambda_c(s) ds`` for every type ``c`` (``t`` defaults to ``T``)."""
    t = seq.T if t is None else float(t)
    past = seq.times < t
    comp = params.mu * t
    if past.any():
        G = basis.G(t - seq.times[past])  # (n, D)
        comp = comp + np.einsum("cnd,nd->c", params.sparse_A()[:, seq.types[past], :], G)
    return comp


def log_likelihood(params: HawkesParams, basis: BasisSet, seq: EventSequence) -> float:
    if seq.M and seq.types.max() >= params.C:
        raise ValueError("sequence uses event types beyond the model's C")
    lam = event_intensities(params, basis, seq)
    if lam.size and not np.all(lam > 0):
        raise FloatingPointError("zero intensity at an event")
    return float(np.sum(np.log(lam)) - np.sum(compensator(params, basis, seq)))


def infectivity(params: HawkesParams, basis: BasisSet) -> np.ndarray:
    """Integrated impact functions ``Phi[c, c'] = sum_d A[c, c', d] int_0^inf g_d``."""
    return params.A @ basis.total_mass()


def spectral_radius(phi: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(phi)))) if phi.size else 0.0
