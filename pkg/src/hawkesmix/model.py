"""Variational mixture state: hyperparameters and responsibilities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet
from .hawkes import HawkesParams

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
RAYLEIGH_VAR = (4.0 - math.pi) / 2.0


@dataclass(eq=False)
class MixtureModel:
    """Dirichlet weights ``alpha`` (K,), Rayleigh scales ``B`` (C, K) and
    Exponential scales ``Sigma`` (C, C, D, K) over a shared basis."""

    alpha: np.ndarray
    B: np.ndarray
    Sigma: np.ndarray
    basis: BasisSet
    alpha0: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = np.array(self.alpha, dtype=float).reshape(-1)
        self.B = np.array(self.B, dtype=float)
        self.Sigma = np.array(self.Sigma, dtype=float)
        self.validate()

    def validate(self) -> None:
        K = self.alpha.size
        if K < 1:
            raise ValueError("model needs K >= 1")
        if self.B.ndim != 2 or self.B.shape[1] != K:
            raise ValueError(f"B must have shape (C, K={K}), got {self.B.shape}")
        C = self.B.shape[0]
        if self.Sigma.shape != (C, C, self.basis.D, K):
            raise ValueError(
                f"Sigma must have shape {(C, C, self.basis.D, K)}, got {self.Sigma.shape}")
        for name in ("alpha", "B", "Sigma"):
            v = getattr(self, name)
            if not np.all(np.isfinite(v)) or not np.all(v > 0):
                raise ValueError(f"{name} entries must be finite and > 0")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be > 0")

    @property
    def K(self) -> int:
        return self.alpha.size

    @property
    def C(self) -> int:
        return self.B.shape[0]

    @property
    def D(self) -> int:
        return self.basis.D

    # cluster-first views used by the engine
    def mean_mu(self) -> np.ndarray:
        """``E[mu]``, shape (K, C)."""
        return SQRT_HALF_PI * self.B.T

    def var_mu(self) -> np.ndarray:
        return RAYLEIGH_VAR * self.B.T ** 2

    def mean_A(self) -> np.ndarray:
        """``E[A]``, shape (K, C, C, D)."""
        return np.moveaxis(self.Sigma, -1, 0)

    def cluster_params(self, k: int) -> HawkesParams:
        return HawkesParams(self.mean_mu()[k], self.mean_A()[k])

    def copy(self) -> "MixtureModel":
        return MixtureModel(self.alpha.copy(), self.B.copy(), self.Sigma.copy(), self.basis,
                            self.alpha0, dict(self.meta))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixtureModel):
            return NotImplemented
        return (np.array_equal(self.alpha, other.alpha) and np.array_equal(self.B, other.B)
                and np.array_equal(self.Sigma, other.Sigma) and self.basis == other.basis
                and self.alpha0 == other.alpha0)

    @classmethod
    def from_estimates(cls, mu: np.ndarray, A: np.ndarray, alpha: np.ndarray, basis: BasisSet,
                       alpha0: float = 1.0, floor: float = 1e-8, meta=None) -> "MixtureModel":
        """Hyperparameters whose expectations are the point estimates ``mu`` (K, C), ``A`` (K, C, C, D)."""
        B = np.maximum(SQRT_2_OVER_PI * np.asarray(mu).T, floor)
        Sigma = np.maximum(np.moveaxis(np.asarray(A), 0, -1), floor)
        return cls(alpha, B, Sigma, basis, alpha0, dict(meta or {}))


@dataclass(eq=False)
class Responsibilities:
    r: np.ndarray  # (N, K)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        if self.r.ndim != 2:
            raise ValueError("responsibilities must be an (N, K) matrix")

    @property
    def Nk(self) -> np.ndarray:
        return self.r.sum(axis=0)

    @property
    def K(self) -> int:
        return self.r.shape[1]

    @property
    def N(self) -> int:
        return self.r.shape[0]

    def labels(self) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lower cluster index
        return np.argmax(self.r, axis=1)

    def max_row_error(self) -> float:
        if self.r.size == 0:
            return 0.0
        return float(np.max(np.abs(self.r.sum(axis=1) - 1.0)))
