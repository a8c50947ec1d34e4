"""Dirichlet mixtures of Hawkes processes for clustering event sequences.

Variational nested EM over Gaussian-basis impact functions, with a
data-driven basis, inner-iteration allocation strategies and cluster-count
updates by pruning and merge/split moves.
"""
from .basis import BasisSet, build_basis, select_basis, silverman_bandwidth
from .events import Corpus, EventSequence, ValidationError
from .hawkes import HawkesParams, infectivity, intensity, log_likelihood
from .inference import FitConfig, FitReport, assign, e_step, fit, m_step
from .model import MixtureModel, Responsibilities

__version__ = "0.1.0"

__all__ = [
    "BasisSet", "Corpus", "EventSequence", "FitConfig", "FitReport", "HawkesParams",
    "MixtureModel", "Responsibilities", "ValidationError", "assign", "build_basis", "e_step",
    "fit", "infectivity", "intensity", "log_likelihood", "m_step", "select_basis",
    "silverman_bandwidth",
]
