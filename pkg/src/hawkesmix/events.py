"""Event-sequence data model.

Event types are stored 0-based internally (``0..C-1``); files use 1-based
indices and the conversion happens in :mod:`hawkesmix.io`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when a sequence or corpus violates its invariants."""


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EventSequence:
    id: str
    T: float
    times: np.ndarray
    types: np.ndarray

    def __init__(self, id: str, T: float, times=(), types=()):
        object.__setattr__(self, "id", str(id))
        object.__setattr__(self, "T", float(T))
        object.__setattr__(self, "times", _frozen(times, float))
        object.__setattr__(self, "types", _frozen(types, np.int64))
        self.validate()

    def validate(self, C: Optional[int] = None) -> None:
        if not np.isfinite(self.T) or self.T <= 0:
            raise ValidationError(f"sequence {self.id!r}: horizon T={self.T} must be > 0")
        if self.times.shape != self.types.shape:
            raise ValidationError(f"sequence {self.id!r}: times/types length mismatch")
        t = self.times
        if t.size:
            if not np.all(np.isfinite(t)):
                raise ValidationError(f"sequence {self.id!r}: non-finite event time")
            bad = np.flatnonzero((t < 0) | (t > self.T))
            if bad.size:
                i = int(bad[0])
                raise ValidationError(
                    f"sequence {self.id!r}: event {i} time {t[i]} outside [0, {self.T}]"
                )
            dec = np.flatnonzero(np.diff(t) < 0)
            if dec.size:
                i = int(dec[0]) + 1
                raise ValidationError(f"sequence {self.id!r}: event {i} time decreases")
            if self.types.min() < 0:
                raise ValidationError(f"sequence {self.id!r}: event type index < 1")
            if C is not None and self.types.max() >= C:
                raise ValidationError(
                    f"sequence {self.id!r}: event type {int(self.types.max()) + 1} exceeds C={C}"
                )

    @property
    def M(self) -> int:
        return int(self.times.size)

    def __len__(self) -> int:
        return self.M

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventSequence):
            return NotImplemented
        return (
            self.id == other.id
            and self.T == other.T
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.types, other.types)
        )

    def __repr__(self) -> str:
        return f"EventSequence(id={self.id!r}, T={self.T}, M={self.M})"


@dataclass(frozen=True, eq=False)
class Corpus:
    """A collection of sequences sharing ``C`` event types.

    ``C_inferred`` records whether ``C`` came from a header or from the data.
    """

    C: int
    sequences: tuple
    labels: Optional[np.ndarray] = None
    C_inferred: bool = field(default=False)

    def __init__(self, C: int, sequences: Sequence[EventSequence], labels=None,
                 C_inferred: bool = False):
        object.__setattr__(self, "C", int(C))
        object.__setattr__(self, "sequences", tuple(sequences))
        object.__setattr__(self, "labels", None if labels is None else _frozen(labels, np.int64))
        object.__setattr__(self, "C_inferred", bool(C_inferred))
        if self.C < 1:
            raise ValidationError("corpus must declare C >= 1")
        for s in self.sequences:
            s.validate(self.C)
        if self.labels is not None:
            if self.labels.size != len(self.sequences):
                raise ValidationError(
                    f"labels have {self.labels.size} entries for {len(self.sequences)} sequences"
                )
            if self.labels.size and self.labels.min() < 0:
                raise ValidationError("labels must be non-negative")

    @classmethod
    def from_sequences(cls, sequences: Sequence[EventSequence], C: Optional[int] = None,
                       labels=None) -> "Corpus":
        if C is None:
            C = max((int(s.types.max()) + 1 for s in sequences if s.M), default=1)
            return cls(C, sequences, labels, C_inferred=True)
        return cls(C, sequences, labels)

    @property
    def N(self) -> int:
        return len(self.sequences)

    @property
    def total_events(self) -> int:
        return sum(s.M for s in self.sequences)

    @property
    def T_max(self) -> float:
        return max(s.T for s in self.sequences)

    def all_times(self) -> np.ndarray:
        if not self.sequences:
            return np.empty(0)
        return np.concatenate([s.times for s in self.sequences])

    def subset(self, index) -> "Corpus":
        index = np.asarray(index, dtype=int)
        labels = None if self.labels is None else self.labels[index]
        return Corpus(self.C, [self.sequences[i] for i in index], labels, self.C_inferred)

    def with_labels(self, labels) -> "Corpus":
        return Corpus(self.C, self.sequences, labels, self.C_inferred)

    def __len__(self) -> int:
        return self.N

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i) -> EventSequence:
        return self.sequences[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        if self.C != other.C or self.sequences != other.sequences:
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)

    def __repr__(self) -> str:
        return f"Corpus(C={self.C}, N={self.N}, events={self.total_events})"
