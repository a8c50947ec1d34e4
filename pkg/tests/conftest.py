import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hawkesmix.basis import build_basis
from hawkesmix.events import Corpus, EventSequence
from hawkesmix.hawkes import HawkesParams
from hawkesmix.simulate import make_basis_suite

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60)
settings.load_profile("default")


def random_params(rng, C, D, scale=0.1, mu_range=(0.2, 1.5)):
    mu = rng.uniform(*mu_range, size=C)
    A = rng.uniform(0.0, scale, size=(C, C, D))
    return HawkesParams(mu, A)


def random_sequence(rng, C, T, M, seq_id="x"):
    times = np.sort(rng.uniform(0.0, T, size=M))
    types = rng.integers(0, C, size=M)
    return EventSequence(seq_id, T, times, types)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_basis():
    return build_basis(6.0, 4 * np.pi / 6.0 * (1 - 1e-12))


@pytest.fixture(scope="session")
def two_cluster_corpus(small_basis):
    """40 sequences from two clearly different two-type Hawkes processes."""
    D = small_basis.D
    p1 = HawkesParams([0.3, 1.2], np.full((2, 2, D), 0.02))
    A2 = np.zeros((2, 2, D))
    A2[0, 1, 0] = 0.5
    p2 = HawkesParams([1.2, 0.3], A2)
    return make_basis_suite([p1, p2], small_basis, [20, 20], 25, seed=3)


@pytest.fixture
def tiny_corpus():
    seqs = [EventSequence("a", 2.0, [0.1, 0.5, 1.5], [0, 1, 0]),
            EventSequence("b", 3.0, [0.2, 2.5], [1, 1]),
            EventSequence("c", 1.0, [], [])]
    return Corpus(2, seqs, [0, 1, 1])


# one PASS/FAIL line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
