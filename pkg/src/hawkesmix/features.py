"""Per-event sufficient statistics of a corpus under a fixed basis.

Every quantity the E- and M-steps need reduces to sums over the history
``j < i`` of ``g_d(t_i - t_j)`` grouped by the source type ``c_j``; these are
computed once per (corpus, basis) pair so that an iteration costs
``O(events * C * D)`` per cluster instead of ``O(pairs * D)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet
from .events import Corpus


@dataclass(frozen=True, eq=False)
class CorpusFeatures:
    N: int
    C: int
    D: int
    T: np.ndarray  # (N,) horizons
    seq_of_event: np.ndarray  # (E,) owning sequence of each event
    type_of_event: np.ndarray  # (E,)
    H: np.ndarray  # (E, C, D): sum_{j<i, c_j=c'} g_d(t_i - t_j)
    H2: np.ndarray  # (E, C, D): same with g_d^2
    Gsum: np.ndarray  # (N, C, D): sum_{i: c_i=c'} G_d(T_n - t_i)
    events_by_type: tuple  # event indices per target type
    seq_starts: np.ndarray  # first event index of each non-empty sequence
    nonempty: np.ndarray  # indices of non-empty sequences

    @property
    def E(self) -> int:
        return self.seq_of_event.size

    def per_sequence(self, values: np.ndarray) -> np.ndarray:
        """Sum per-event values (E, ...) into per-sequence totals (N, ...), in a fixed order."""
        out = np.zeros((self.N,) + values.shape[1:])
        if self.nonempty.size:
            out[self.nonempty] = np.add.reduceat(values, self.seq_starts, axis=0)
        return out


def _sequence_history(times: np.ndarray, types: np.ndarray, basis: BasisSet, C: int):
    M = times.size
    D = basis.D
    H = np.zeros((M, C, D))
    H2 = np.zeros((M, C, D))
    if M < 2:
        return H, H2
    onehot = np.zeros((M, C))
    onehot[np.arange(M), types] = 1.0
    # chunk targets to bound memory at O(chunk * M * D)
    chunk = max(1, 2_000_000 // max(M * D, 1))
    for start in range(1, M, chunk):
        stop = min(M, start + chunk)
        tau = times[start:stop, None] - times[None, :stop]
        mask = np.arange(stop)[None, :] < np.arange(start, stop)[:, None]
        g = basis.g(np.where(mask, tau, 0.0)) * mask[..., None]
        H[start:stop] = np.einsum("ijd,jc->icd", g, onehot[:stop])
        H2[start:stop] = np.einsum("ijd,jc->icd", g * g, onehot[:stop])
    return H, H2


def corpus_features(corpus: Corpus, basis: BasisSet) -> CorpusFeatures:
    C, D, N = corpus.C, basis.D, corpus.N
    Hs, H2s, seq_idx, types = [], [], [], []
    Gsum = np.zeros((N, C, D))
    for n, s in enumerate(corpus.sequences):
        if s.M == 0:
            continue
        H, H2 = _sequence_history(s.times, s.types, basis, C)
        Hs.append(H)
        H2s.append(H2)
        seq_idx.append(np.full(s.M, n))
        types.append(s.types)
        G = basis.G(s.T - s.times)  # (M, D)
        np.add.at(Gsum[n], s.types, G)
    if Hs:
        H, H2 = np.concatenate(Hs), np.concatenate(H2s)
        seq_of_event, type_of_event = np.concatenate(seq_idx), np.concatenate(types)
    else:
        H = H2 = np.zeros((0, C, D))
        seq_of_event = type_of_event = np.zeros(0, dtype=np.int64)
    by_type = tuple(np.flatnonzero(type_of_event == c) for c in range(C))
    T = np.array([s.T for s in corpus.sequences], dtype=float)
    counts = np.array([s.M for s in corpus.sequences], dtype=np.int64)
    nonempty = np.flatnonzero(counts > 0)
    starts = (np.cumsum(counts) - counts)[nonempty]
    return CorpusFeatures(N, C, D, T, seq_of_event, type_of_event, H, H2, Gsum, by_type,
                          starts, nonempty)
