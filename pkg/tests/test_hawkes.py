import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from hawkesmix.basis import BasisSet, build_basis
from hawkesmix.events import EventSequence
from hawkesmix.hawkes import (HawkesParams, compensator, event_intensities, infectivity,
                              intensity, log_likelihood, spectral_radius)

from conftest import random_params, random_sequence

UNIT = BasisSet(1.0, 1, (0.0,), 1.0, 3.0)


def test_params_validation():
    with pytest.raises(ValueError):
        HawkesParams([0.0], np.zeros((1, 1, 1)))
    with pytest.raises(ValueError):
        HawkesParams([1.0], -np.ones((1, 1, 1)))
    with pytest.raises(ValueError):
        HawkesParams([1.0, 1.0], np.zeros((1, 1, 1)))


def test_intensity_hand_example():
    p = HawkesParams([0.5], [[[2.0]]])
    s = EventSequence("a", 3.0, [1.0], [0])
    assert intensity(p, UNIT, s, 2.0, 0) == pytest.approx(0.5 + 2 * math.exp(-0.5), abs=1e-12)
    assert intensity(p, UNIT, s, 2.0, 0) == pytest.approx(1.71306, abs=1e-5)


def test_intensity_poisson_and_empty_history():
    p = HawkesParams([2.0, 0.5], np.zeros((2, 2, 1)))
    s = EventSequence("a", 3.0, [1.0, 2.0], [0, 1])
    assert intensity(p, UNIT, s, 2.5, 0) == 2.0
    q = HawkesParams([0.7], [[[3.0]]])
    assert intensity(q, UNIT, EventSequence("b", 3.0, [1.0], [0]), 0.5, 0) == 0.7
    # strict past: an event exactly at t does not count
    assert intensity(q, UNIT, EventSequence("b", 3.0, [1.0], [0]), 1.0, 0) == 0.7


def test_poisson_loglik_examples():
    p = HawkesParams([2.0], np.zeros((1, 1, 1)))
    s = EventSequence("a", 3.0, [0.1, 0.5, 1.0, 2.0], [0] * 4)
    assert log_likelihood(p, UNIT, s) == pytest.approx(4 * math.log(2) - 6, abs=1e-12)
    q = HawkesParams([1.0, 1.0], np.zeros((2, 2, 1)))
    assert log_likelihood(q, UNIT, EventSequence("e", 1.0)) == pytest.approx(-2.0, abs=1e-15)


def _grid_compensator(p, basis, s, n=100_000):
    t = (np.arange(n) + 0.5) * (s.T / n)  # midpoint rule
    lam = np.full((n, p.C), p.mu)
    for ti, ci in zip(s.times, s.types):
        dt = t - ti
        mask = dt > 0
        lam[mask] += basis.g(dt[mask]) @ p.A[:, ci, :].T
    return lam.sum(axis=0) * (s.T / n)


def test_compensator_matches_dense_grid(rng):
    basis = build_basis(5.0, 1.7)
    for _ in range(5):
        p = random_params(rng, 3, basis.D, 0.3)
        s = random_sequence(rng, 3, 5.0, 15)
        assert np.allclose(compensator(p, basis, s), _grid_compensator(p, basis, s), rtol=1e-4)


def test_event_intensities_match_pointwise(rng):
    basis = build_basis(4.0, 2.0)
    p = random_params(rng, 2, basis.D, 0.4)
    s = random_sequence(rng, 2, 4.0, 12)
    lam = event_intensities(p, basis, s)
    ref = [intensity(p, basis, s, t, c) for t, c in zip(s.times, s.types)]
    assert np.allclose(lam, ref, rtol=1e-13)


def test_ties_use_position_not_time():
    p = HawkesParams([1.0], [[[1.0]]])
    s = EventSequence("t", 3.0, [1.0, 1.0], [0, 0])
    lam = event_intensities(p, UNIT, s)
    # the second tied event sees the first with lag 0, g(0) = 1
    assert lam.tolist() == [1.0, 2.0]


@given(st.integers(0, 2**32 - 1))
def test_intensity_is_additive_over_histories(seed):
    rng = np.random.default_rng(seed)
    basis = build_basis(5.0, 1.5)
    p = random_params(rng, 2, basis.D, 0.5)
    h1 = random_sequence(rng, 2, 4.0, 5)
    h2 = random_sequence(rng, 2, 4.0, 4)
    order = np.argsort(np.r_[h1.times, h2.times], kind="stable")
    both = EventSequence("u", 5.0, np.r_[h1.times, h2.times][order],
                         np.r_[h1.types, h2.types][order])
    t = 4.5
    for c in range(2):
        lhs = intensity(p, basis, both, t, c) - p.mu[c]
        rhs = (intensity(p, basis, h1, t, c) - p.mu[c]) + (intensity(p, basis, h2, t, c) - p.mu[c])
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_infectivity_matches_quadrature(rng):
    basis = build_basis(6.0, 1.2)
    for _ in range(10):
        p = random_params(rng, 2, basis.D, 0.5)
        phi = infectivity(p, basis)
        for c in range(2):
            for cp in range(2):
                f = lambda t: float(p.A[c, cp] @ basis.g(t))
                ref = quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
                assert abs(phi[c, cp] - ref) < 1e-8


def test_infectivity_examples():
    basis = BasisSet(1.0, 1, (5.0,), 0.5, 3.0)
    p = HawkesParams([1.0], [[[1.0]]])
    assert infectivity(p, basis)[0, 0] == pytest.approx(math.sqrt(2 * math.pi) * 0.5, rel=1e-12)
    assert np.all(infectivity(HawkesParams([1.0], [[[0.0]]]), basis) == 0)
    q = HawkesParams([1.0], [[[2.0]]])
    assert infectivity(q, basis)[0, 0] == 2 * infectivity(p, basis)[0, 0]


def test_spectral_radius():
    assert spectral_radius(np.array([[0.5, 0.0], [0.0, 0.2]])) == pytest.approx(0.5)
