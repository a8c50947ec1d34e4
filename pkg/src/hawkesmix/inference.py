"""Nested variational EM for a Dirichlet mixture of Hawkes processes.

Outer iterations alternate responsibilities (E-step) with a MAP M-step that
is itself an inner majorise-maximise loop; hyperparameters are refreshed
from the MAP point, clusters are pruned and optionally merged/split by MCMC.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .basis import BasisSet, select_basis
from .engine import (Workspace, e_step_ws, inner_iteration, map_objective,
                     mixture_nll, prior_means, prior_scales)
from .events import Corpus
from .features import corpus_features
from .hawkes import infectivity
from .model import MixtureModel, Responsibilities
from .schedule import STRATEGIES, allocation_schedule

log = logging.getLogger(__name__)

SCALE_FLOOR = 1e-8


def workspace(corpus, basis: BasisSet) -> Workspace:
    if isinstance(corpus, Workspace):
        return corpus
    return Workspace(corpus_features(corpus, basis))


# --------------------------------------------------------------------------- E / M steps

def e_step(model: MixtureModel, corpus) -> Responsibilities:
    """Responsibilities for every sequence; ``corpus`` may be a Corpus or a prepared Workspace."""
    ws = workspace(corpus, model.basis)
    if ws.feat.C != model.C:
        raise ValueError(f"corpus has C={ws.feat.C} but the model has C={model.C}")
    return e_step_ws(model, ws)


def inner_m_iteration(mu, A, responsibilities, corpus, B, Sigma, basis: BasisSet | None = None):
    """One closed-form MM sweep.

    ``mu`` (K, C) and ``A`` (K, C, C, D) are cluster-first; ``B`` (C, K) and
    ``Sigma`` (C, C, D, K) use the model layout.
    """
    r = _as_r(responsibilities)
    ws = workspace(corpus, basis)
    beta = np.asarray(B, dtype=float).T
    sigma = np.moveaxis(np.asarray(Sigma, dtype=float), -1, 0)
    mu_new, A_new, _ = inner_iteration(np.asarray(mu, float), np.asarray(A, float), r, ws,
                                       beta, sigma)
    return mu_new, A_new


@dataclass
class MStepResult:
    mu: np.ndarray
    A: np.ndarray
    objective: float
    objectives: list  # objective before the first and after every inner sweep
    loglik: np.ndarray  # (N, K) at the returned point


def m_step(responsibilities, corpus, model: MixtureModel, n_inner: int,
           track: bool = False) -> MStepResult:
    """MAP estimate of (mu, A) started from the prior means, after ``n_inner`` sweeps."""
    if n_inner < 1:
        raise ValueError("n_inner must be >= 1")
    r = _as_r(responsibilities)
    ws = workspace(corpus, model.basis)
    beta, sigma = prior_scales(model)
    mu, A = prior_means(model)
    objectives = []
    if track:
        objectives.append(map_objective(mu, A, r, ws, beta, sigma))
    for _ in range(n_inner):
        mu, A, _ = inner_iteration(mu, A, r, ws, beta, sigma)
        if track:
            objectives.append(map_objective(mu, A, r, ws, beta, sigma))
    loglik = ws.loglik_matrix(mu, A)
    obj = map_objective(mu, A, r, ws, beta, sigma, loglik)
    return MStepResult(mu, A, obj, objectives, loglik)


def refresh_hyperparams(mu_hat, A_hat, responsibilities, alpha0: float, basis: BasisSet,
                        floor: float = SCALE_FLOOR, meta=None) -> MixtureModel:
    """``Sigma = A_hat``, ``B = sqrt(2/pi) mu_hat``, ``alpha_k = alpha0 / K + N_k``."""
    r = _as_r(responsibilities)
    K = r.shape[1]
    alpha = alpha0 / K + r.sum(axis=0)
    return MixtureModel.from_estimates(mu_hat, A_hat, alpha, basis, alpha0, floor, meta)


def _as_r(responsibilities) -> np.ndarray:
    if isinstance(responsibilities, Responsibilities):
        return responsibilities.r
    return np.asarray(responsibilities, dtype=float)


def mixture_weights(r: np.ndarray) -> np.ndarray:
    return r.sum(axis=0) / r.shape[0]


# --------------------------------------------------------------------------- cluster count

def prune_clusters(model: MixtureModel, responsibilities, N_min: float = 1.0,
                   empty_tol: float = 1e-12):
    """Drop empty clusters and fold clusters with ``N_k < N_min`` into the cluster
    whose infectivity matrix is nearest in Frobenius norm. K never drops below 1."""
    r = _as_r(responsibilities).copy()
    Nk = r.sum(axis=0)
    K = Nk.size
    if K == 1:
        return model, Responsibilities(r)
    small = Nk < max(N_min, empty_tol)
    if not small.any():
        return model, Responsibilities(r)
    if small.all():
        small[np.argmax(Nk)] = False
    keep = np.flatnonzero(~small)
    phi = np.stack([infectivity(model.cluster_params(k), model.basis) for k in range(K)])
    for k in np.flatnonzero(small):
        if Nk[k] > empty_tol:
            dist = np.linalg.norm((phi[keep] - phi[k]).reshape(keep.size, -1), axis=1)
            target = keep[int(np.argmin(dist))]
            r[:, target] += r[:, k]
    r = r[:, keep]
    r /= r.sum(axis=1, keepdims=True)
    pruned = MixtureModel(model.alpha0 / keep.size + r.sum(axis=0), model.B[:, keep],
                          model.Sigma[..., keep], model.basis, model.alpha0, model.meta)
    return pruned, Responsibilities(r)


def merge_params(pi, mu, A, k1: int, k2: int):
    """Merge clusters ``k1`` and ``k2`` into slot ``min(k1, k2)``; weights add, parameters average."""
    lo, hi = sorted((k1, k2))
    p = pi[k1] + pi[k2]
    w1, w2 = pi[k1] / p, pi[k2] / p
    pi2, mu2, A2 = pi.copy(), mu.copy(), A.copy()
    pi2[lo] = p
    mu2[lo] = w1 * mu[k1] + w2 * mu[k2]
    A2[lo] = w1 * A[k1] + w2 * A[k2]
    keep = np.arange(pi.size) != hi
    return pi2[keep], mu2[keep], A2[keep]


def split_params(pi, mu, A, k: int, a: float):
    """Split cluster ``k`` into slot ``k`` (weight ``a``) and a new last slot (weight ``1 - a``)."""
    pi2 = np.append(pi, (1.0 - a) * pi[k])
    pi2[k] = a * pi[k]
    mu2 = np.concatenate([mu, mu[k:k + 1] / (2.0 * (1.0 - a))])
    mu2[k] = mu[k] / (2.0 * a)
    A2 = np.concatenate([A, A[k:k + 1] / (2.0 * (1.0 - a))])
    A2[k] = A[k] / (2.0 * a)
    return pi2, mu2, A2


def log_dirichlet(pi: np.ndarray, concentration: float) -> float:
    K = pi.size
    a = concentration / K
    with np.errstate(divide="ignore"):
        return float(gammaln(concentration) - K * gammaln(a) + np.sum((a - 1.0) * np.log(pi)))


@dataclass
class MCMCResult:
    model: MixtureModel
    responsibilities: Responsibilities
    accepted: bool
    move: str
    log_ratio: float = float("nan")


def mcmc_move(model: MixtureModel, responsibilities, corpus, rng: np.random.Generator,
              max_retries: int = 20) -> MCMCResult:
    """Propose one merge or split of the expectation-point parameters and accept it
    with probability ``min(1, likelihood ratio * prior ratio)``."""
    r = _as_r(responsibilities)
    ws = workspace(corpus, model.basis)
    K = model.K
    pi = mixture_weights(r)
    mu, A = prior_means(model)
    q_merge = 0.5 if K >= 2 else 0.0
    if rng.uniform() < q_merge:
        move = "merge"
        k1, k2 = rng.choice(K, size=2, replace=False)
        pi2, mu2, A2 = merge_params(pi, mu, A, int(k1), int(k2))
        lo, hi = sorted((int(k1), int(k2)))
        r2 = r.copy()
        r2[:, lo] += r2[:, hi]
        r2 = np.delete(r2, hi, axis=1)
    else:
        move = "split"
        k = int(rng.integers(K))
        for _ in range(max_retries):
            a = float(rng.beta(1.0, 1.0))
            if 1e-6 < a < 1.0 - 1e-6:
                break
        else:
            return MCMCResult(model, Responsibilities(r), False, "none")
        pi2, mu2, A2 = split_params(pi, mu, A, k, a)
        r2 = np.concatenate([r, (1.0 - a) * r[:, k:k + 1]], axis=1)
        r2[:, k] *= a
    if np.any(pi2 <= 0):
        return MCMCResult(model, Responsibilities(r), False, "none")
    ll_old = -mixture_nll(ws.loglik_matrix(mu, A), pi)
    ll_new = -mixture_nll(ws.loglik_matrix(mu2, A2), pi2)
    log_ratio = (ll_new - ll_old + log_dirichlet(pi2, model.alpha0)
                 - log_dirichlet(pi, model.alpha0))
    accepted = bool(np.log(rng.uniform()) < min(0.0, log_ratio))
    if not accepted:
        return MCMCResult(model, Responsibilities(r), False, move, log_ratio)
    new_model = refresh_hyperparams(mu2, A2, r2, model.alpha0, model.basis, meta=model.meta)
    return MCMCResult(new_model, Responsibilities(r2), True, move, log_ratio)


# --------------------------------------------------------------------------- driver

@dataclass
class FitConfig:
    K_init: int = 10
    budget: int = 100  # total inner iterations
    outer_iters: Optional[int] = None  # heuristics default to 20; open loop to budget // 2
    strategy: str = "open_loop"
    lo: Optional[int] = None  # ramp endpoints for increasing / decreasing
    hi: Optional[int] = None
    N_min: float = 1.0
    mcmc: bool = False
    seed: int = 0
    tol: Optional[float] = None  # stop when the NLL improves by less than this
    alpha0: float = 1.0
    basis_epsilon: Optional[float] = None
    basis_rel_epsilon: float = 1e-2
    max_basis: Optional[int] = None
    init_B: tuple = (0.1, 1.0)
    init_Sigma: tuple = (0.01, 0.1)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.K_init < 1 or self.budget < 1:
            raise ValueError("K_init and budget must be >= 1")
        if self.N_min < 0:
            raise ValueError("N_min must be >= 0")
        if self.outer_iters is not None and self.outer_iters < 1:
            raise ValueError("outer_iters must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        d = dict(d)
        for key in ("init_B", "init_Sigma"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class FitReport:
    config: FitConfig
    trace: list
    model: MixtureModel
    responsibilities: Responsibilities
    labels: np.ndarray
    max_row_error: float = 0.0

    @property
    def K(self) -> int:
        return self.model.K

    @property
    def nll(self) -> float:
        return self.trace[-1]["nll"] if self.trace else float("nan")

    @property
    def inner_used(self) -> int:
        return sum(row["inner_used"] for row in self.trace)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "trace": self.trace,
            "labels": [int(x) for x in self.labels],
            "K": self.K,
            "final_nll": self.nll,
            "max_row_error": self.max_row_error,
        }


def initial_state(corpus_N: int, C: int, basis: BasisSet, config: FitConfig,
                  rng: np.random.Generator):
    K = config.K_init
    r = rng.dirichlet(np.ones(K), size=corpus_N) if corpus_N else np.zeros((0, K))
    B = rng.uniform(*config.init_B, size=(C, K))
    Sigma = rng.uniform(*config.init_Sigma, size=(C, C, basis.D, K))
    alpha = config.alpha0 / K + r.sum(axis=0)
    return MixtureModel(alpha, B, Sigma, basis, config.alpha0), Responsibilities(r)


def fit(corpus: Corpus, config: FitConfig | None = None, basis: BasisSet | None = None,
        init=None, ws: Workspace | None = None) -> FitReport:
    """Run the nested EM. ``init`` optionally supplies ``(model, responsibilities)``."""
    config = config or FitConfig()
    if corpus.N == 0:
        raise ValueError("cannot fit an empty corpus")
    if basis is None:
        basis = init[0].basis if init is not None else select_basis(
            corpus, config.basis_epsilon, config.basis_rel_epsilon, config.max_basis)
    ws = ws or workspace(corpus, basis)
    init_rng, mcmc_rng = (np.random.default_rng(s)
                          for s in np.random.SeedSequence(config.seed).spawn(2))
    if init is None:
        model, resp = initial_state(corpus.N, corpus.C, basis, config, init_rng)
    else:
        model, resp = init[0].copy(), Responsibilities(_as_r(init[1]).copy())
    model.meta.update({"basis_convention": "bandwidth = 1 / omega0",
                       "C_inferred": corpus.C_inferred})
    r = resp.r

    if config.strategy == "open_loop":
        outers = config.outer_iters or config.budget // 2
        schedule = None
    else:
        outers = config.outer_iters or min(20, config.budget)
        schedule = allocation_schedule(config.strategy, config.budget, outers,
                                       config.lo, config.hi)

    trace = []
    max_err = 0.0
    used = 0
    prev_nll = math.inf
    for it in range(outers):
        row = {"iter": it}
        if schedule is None:
            if config.budget - used < 2:
                break
            m1 = m_step(r, ws, model, 1)
            L1 = mixture_nll(m1.loglik, mixture_weights(r))
            r2 = e_step_ws(model, ws).r
            max_err = max(max_err, Responsibilities(r2).max_row_error())
            m2 = m_step(r2, ws, model, 1)
            L2 = mixture_nll(m2.loglik, mixture_weights(r2))
            if L1 < L2:
                kept, nll, branch = m1, L1, "m_step"
            else:
                kept, nll, branch, r = m2, L2, "e_and_m_step", r2
            assert nll <= max(L1, L2)
            row.update(inner_used=2, branch=branch, L1=L1, L2=L2)
        else:
            n_inner = schedule[it]
            r = e_step_ws(model, ws).r
            max_err = max(max_err, Responsibilities(r).max_row_error())
            kept = m_step(r, ws, model, n_inner)
            nll = mixture_nll(kept.loglik, mixture_weights(r))
            row.update(inner_used=n_inner)
        used += row["inner_used"]
        model = refresh_hyperparams(kept.mu, kept.A, r, config.alpha0, basis, meta=model.meta)
        model, resp = prune_clusters(model, r, config.N_min)
        r = resp.r
        if config.mcmc:
            res = mcmc_move(model, r, ws, mcmc_rng)
            model, r = res.model, res.responsibilities.r
            row.update(move=res.move, accepted=res.accepted)
        row.update(cum_inner=used, nll=nll, K=model.K)
        trace.append(row)
        log.debug("outer %d: nll=%.6f K=%d", it, nll, model.K)
        if config.tol is not None and prev_nll - nll < config.tol:
            break
        prev_nll = nll

    # labels come from one more E-step so they agree with assign() on the final model
    final = e_step_ws(model, ws)
    max_err = max(max_err, final.max_row_error())
    return FitReport(config, trace, model, final, final.labels(), max_err)


def assign(model: MixtureModel, corpus) -> tuple[np.ndarray, Responsibilities]:
    """Hard labels (ties to the lower index) and soft responsibilities from one E-step."""
    resp = e_step(model, corpus)
    return resp.labels(), resp
