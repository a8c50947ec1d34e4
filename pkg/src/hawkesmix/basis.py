"""Gaussian basis functions for the impact functions, chosen from the data.

The bandwidth of the pooled-timestamp kernel density estimate gives an upper
bound on the spectrum of the aggregate intensity; the cutoff frequency is the
smallest one whose spectral tail mass falls below a tolerance, and the basis
count follows from sampling ``[0, T_max]`` at that frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc

from .events import Corpus

SQRT2 = math.sqrt(2.0)
SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


def silverman_bandwidth(corpus: Corpus) -> float:
    """Silverman's rule of thumb on all event timestamps pooled together."""
    t = corpus.all_times()
    if t.size == 0:
        raise ValueError("empty corpus")
    return _silverman(float(np.std(t)), t.size)


def _silverman(sigma: float, n_events: int) -> float:
    if not sigma > 0:
        raise ValueError("degenerate timestamps")
    return (4.0 * sigma**5 / (3.0 * n_events)) ** 0.2


def spectral_tail_mass(omega0, h: float, total_events: float):
    """Integral of the spectral bound ``n*sqrt(2*pi*h^2)*exp(-w^2 h^2/2)`` over ``[omega0, inf)``."""
    return math.pi * total_events * erfc(np.asarray(omega0) * h / SQRT2)


def cutoff_frequency(h: float, total_events: float, epsilon: float,
                     omega_min: float = 0.0, rtol: float = 1e-6) -> float:
    """Smallest ``omega0 >= omega_min`` with tail mass at most ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if spectral_tail_mass(0.0, h, total_events) <= epsilon:
        return float(omega_min)
    lo, hi = 0.0, 1.0 / h
    while spectral_tail_mass(hi, h, total_events) > epsilon:
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if spectral_tail_mass(mid, h, total_events) > epsilon:
            lo = mid
        else:
            hi = mid
    return max(float(hi), float(omega_min))


def select_cutoff(corpus: Corpus, epsilon: float, omega_min: float | None = None) -> float:
    """Cutoff frequency for ``corpus``; the floor defaults to ``pi / T_max`` so that D >= 1."""
    h = silverman_bandwidth(corpus)
    if omega_min is None:
        omega_min = math.pi / corpus.T_max
    return cutoff_frequency(h, corpus.total_events, epsilon, omega_min)


@dataclass(frozen=True)
class BasisSet:
    """``g_d(t) = exp(-(t - t_d)^2 / (2 h^2))`` with equally spaced centers from 0."""

    omega0: float
    D: int
    centers: tuple
    bandwidth: float
    T_max: float

    @property
    def centers_array(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)

    def g(self, t) -> np.ndarray:
        """Basis values, shape ``t.shape + (D,)``."""
        t = np.asarray(t, dtype=float)[..., None]
        z = (t - self.centers_array) / self.bandwidth
        return np.exp(-0.5 * z * z)

    def G(self, t) -> np.ndarray:
        """Closed-form ``int_0^t g_d(s) ds``, shape ``t.shape + (D,)``."""
        t = np.asarray(t, dtype=float)[..., None]
        c = self.centers_array
        s = SQRT2 * self.bandwidth
        return SQRT_HALF_PI * self.bandwidth * (erf((t - c) / s) + erf(c / s))

    def total_mass(self) -> np.ndarray:
        """``int_0^inf g_d``: the Gaussian mass to the right of zero."""
        c = self.centers_array
        return SQRT_HALF_PI * self.bandwidth * (1.0 + erf(c / (SQRT2 * self.bandwidth)))

    def future_max(self, t) -> np.ndarray:
        """``sup_{s >= t} g_d(s)``; non-increasing in ``t``."""
        t = np.asarray(t, dtype=float)[..., None]
        z = np.maximum(t - self.centers_array, 0.0) / self.bandwidth
        return np.exp(-0.5 * z * z)

    def to_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "D": self.D,
            "centers": list(self.centers),
            "bandwidth": self.bandwidth,
            "T_max": self.T_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSet":
        centers = tuple(float(c) for c in d["centers"])
        if int(d["D"]) != len(centers) or int(d["D"]) < 1:
            raise ValueError("basis: D must equal the number of centers and be >= 1")
        if not float(d["bandwidth"]) > 0 or not float(d["omega0"]) > 0:
            raise ValueError("basis: bandwidth and omega0 must be > 0")
        T_max = float(d.get("T_max", len(centers) * math.pi / float(d["omega0"])))
        return cls(float(d["omega0"]), int(d["D"]), centers, float(d["bandwidth"]), T_max)


def basis_count(T_max: float, omega0: float) -> int:
    return max(1, math.ceil(T_max * omega0 / math.pi))


def build_basis(T_max: float, omega0: float, max_D: int | None = None) -> BasisSet:
    if not (T_max > 0 and omega0 > 0):
        raise ValueError("T_max and omega0 must be > 0")
    D = basis_count(T_max, omega0)
    if max_D is not None and D > max_D:
        # keep D = ceil(T*omega0/pi) consistent by lowering the cutoff
        omega0 = max_D * math.pi / T_max * (1.0 - 1e-12)
        D = max_D
    centers = tuple(d * T_max / D for d in range(D))
    return BasisSet(float(omega0), D, centers, 1.0 / omega0, float(T_max))


def select_basis(corpus: Corpus, epsilon: float | None = None,
                 rel_epsilon: float = 1e-2, max_D: int | None = None) -> BasisSet:
    """Data-driven basis for ``corpus``.

    ``epsilon`` defaults to ``rel_epsilon`` times the full spectral mass ``pi * sum(M_n)``.
    """
    if epsilon is None:
        epsilon = rel_epsilon * math.pi * corpus.total_events
    omega0 = select_cutoff(corpus, epsilon)
    return build_basis(corpus.T_max, omega0, max_D=max_D)
