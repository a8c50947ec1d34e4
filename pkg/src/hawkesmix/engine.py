"""Vectorised numerics of the nested variational EM.

Point parameters are carried cluster-first: ``mu`` (K, C), ``A`` (K, C, C, D).
"""
from __future__ import annotations

import numpy as np
from scipy.special import digamma, logsumexp

from .features import CorpusFeatures
from .model import SQRT_HALF_PI, MixtureModel, Responsibilities


class NumericalError(FloatingPointError):
    pass


def _flat_by_type(feat: CorpusFeatures, X: np.ndarray) -> list:
    C, D = feat.C, feat.D
    return [X[idx].reshape(idx.size, C * D) for idx in feat.events_by_type]


class Workspace:
    """Caches type-grouped views of the history statistics for one corpus."""

    def __init__(self, feat: CorpusFeatures):
        self.feat = feat
        self.H_by_type = _flat_by_type(feat, feat.H)
        self._H2 = None
        # Gsum reshaped (N, C*D) is reused by every likelihood evaluation
        self.Gflat = feat.Gsum.reshape(feat.N, feat.C * feat.D)

    @property
    def H2_by_type(self):
        if self._H2 is None:
            self._H2 = _flat_by_type(self.feat, self.feat.H2)
        return self._H2

    def event_rates(self, mu: np.ndarray, A: np.ndarray, stats=None) -> np.ndarray:
        """``mu[k, c_i] + sum A[k, c_i, c', d] * stats[i, c', d]`` for all (k, i), shape (K, E)."""
        feat = self.feat
        groups = self.H_by_type if stats is None else stats
        K = mu.shape[0]
        out = np.empty((K, feat.E))
        for c, idx in enumerate(feat.events_by_type):
            if idx.size == 0:
                continue
            coef = A[:, c].reshape(K, -1)
            out[:, idx] = mu[:, c, None] + np.einsum("kj,ij->ki", coef, groups[c])
        return out

    def compensators(self, mu: np.ndarray, A: np.ndarray) -> np.ndarray:
        """``sum_c int_0^{T_n} lambda^k_c``, shape (N, K)."""
        feat = self.feat
        K = mu.shape[0]
        A_src = A.sum(axis=1).reshape(K, -1)  # summed over the target type
        return feat.T[:, None] * mu.sum(axis=1)[None, :] + np.einsum("nj,kj->nk", self.Gflat, A_src)

    def loglik_matrix(self, mu: np.ndarray, A: np.ndarray) -> np.ndarray:
        """``log HP(s_n | mu^k, A^k)``, shape (N, K)."""
        lam = self.event_rates(mu, A)
        if np.any(lam <= 0):
            raise NumericalError("non-positive intensity at an event")
        return self.feat.per_sequence(np.log(lam).T) - self.compensators(mu, A)


def expected_log_weights(alpha: np.ndarray) -> np.ndarray:
    return digamma(alpha) - digamma(alpha.sum())


def log_rho(model: MixtureModel, ws: Workspace) -> np.ndarray:
    """Unnormalised log responsibilities with the second-order correction for ``E[log lambda]``."""
    mean_mu, var_mu = model.mean_mu(), model.var_mu()
    mean_A = model.mean_A()
    E = ws.event_rates(mean_mu, mean_A)
    V = ws.event_rates(var_mu, mean_A ** 2, ws.H2_by_type)
    per_event = np.log(E) - V / (2.0 * E * E)
    out = (expected_log_weights(model.alpha)[None, :]
           + ws.feat.per_sequence(per_event.T)
           - ws.compensators(mean_mu, mean_A))
    if not np.all(np.isfinite(out)):
        n, k = np.argwhere(~np.isfinite(out))[0]
        raise NumericalError(f"non-finite log rho for sequence {n}, cluster {k}")
    return out


def normalize_log(log_r: np.ndarray) -> np.ndarray:
    r = np.exp(log_r - logsumexp(log_r, axis=1, keepdims=True))
    # one correction pass tightens row sums to ~1 ulp
    return r / r.sum(axis=1, keepdims=True)


def e_step_ws(model: MixtureModel, ws: Workspace) -> Responsibilities:
    return Responsibilities(normalize_log(log_rho(model, ws)))


def quadratic_root(a, b, c):
    """Positive root of ``a x^2 + b x + c`` for ``a > 0``, ``c < 0``.

    Uses ``2|c| / (b + sqrt(b^2 - 4ac))``, algebraically equal to the usual
    ``(-b + sqrt(...)) / 2a`` but free of cancellation when ``b`` dominates.
    """
    disc = b * b - 4.0 * a * c
    assert np.all(disc > 0), "discriminant must be positive when c < 0"
    return -2.0 * c / (b + np.sqrt(disc))


def inner_iteration(mu, A, r, ws: Workspace, beta, sigma):
    """One majorise-maximise sweep of the MAP problem.

    ``beta`` (K, C) and ``sigma`` (K, C, C, D) are the Rayleigh / Exponential scales.
    Returns ``(mu', A', (qa, qb, qc))`` with the quadratic coefficients of the mu update.
    """
    feat = ws.feat
    K, C, D = mu.shape[0], feat.C, feat.D
    lam = ws.event_rates(mu, A)
    w = r[feat.seq_of_event].T / lam  # r_{n(i),k} / lambda^k(t_i)
    mu_num = np.zeros((K, C))
    num = np.zeros((K, C, C * D))
    for c, idx in enumerate(feat.events_by_type):
        if idx.size == 0:
            continue
        wc = w[:, idx]
        mu_num[:, c] = wc.sum(axis=1) * mu[:, c]
        num[:, c] = np.einsum("ki,ij->kj", wc, ws.H_by_type[c])
    num = num.reshape(K, C, C, D) * A
    qa = 1.0 / beta ** 2
    qb = np.broadcast_to(np.einsum("nk,n->k", r, feat.T)[:, None], (K, C))
    qc = -1.0 - mu_num
    mu_new = quadratic_root(qa, qb, qc)
    G_r = np.einsum("nk,nj->kj", r, ws.Gflat).reshape(K, 1, C, D)
    A_new = num / (1.0 / sigma + G_r)
    return mu_new, A_new, (qa, qb, qc)


def log_prior(mu, A, beta, sigma) -> float:
    """``log p(mu) + log p(A)`` under Rayleigh(beta) and Exponential(sigma) priors."""
    lp_mu = np.log(mu) - 2.0 * np.log(beta) - 0.5 * (mu / beta) ** 2
    lp_A = -np.log(sigma) - A / sigma
    return float(lp_mu.sum() + lp_A.sum())


def map_objective(mu, A, r, ws: Workspace, beta, sigma, loglik=None) -> float:
    if loglik is None:
        loglik = ws.loglik_matrix(mu, A)
    return log_prior(mu, A, beta, sigma) + float(np.sum(r * loglik))


def mixture_nll(loglik: np.ndarray, weights: np.ndarray) -> float:
    """``-sum_n log sum_k pi_k HP(s_n | k)``."""
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return -float(np.sum(logsumexp(loglik + logw[None, :], axis=1)))


def prior_scales(model: MixtureModel):
    """Cluster-first prior scales ``beta`` (K, C) and ``sigma`` (K, C, C, D)."""
    return model.B.T.copy(), np.moveaxis(model.Sigma, -1, 0).copy()


def prior_means(model: MixtureModel):
    return SQRT_HALF_PI * model.B.T, np.moveaxis(model.Sigma, -1, 0).copy()

