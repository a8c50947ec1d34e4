"""Reading and writing corpora and fitted models.

Files use 1-based event types; in memory they are 0-based.

JSONL corpus: an optional first line ``{"meta": {"C": 5}}`` followed by one
``{"id": ..., "T": ..., "events": [[t, c], ...]}`` object per line.

CSV corpus: ``id,t,c`` rows plus a JSON sidecar ``<file>.meta.json`` holding
``{"C": optional, "T": {id: horizon}}``; the sidecar also fixes sequence order
and carries sequences without events.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .basis import BasisSet
from .events import Corpus, EventSequence, ValidationError
from .model import MixtureModel

FORMATS = ("jsonl", "csv")


class ParseError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = str(path), line


def _format_of(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}; choose from {FORMATS}")
    return fmt


def _declared_C(meta, where) -> int | None:
    if meta is None or meta.get("C") is None:
        return None
    C = meta["C"]
    if isinstance(C, bool) or not isinstance(C, int) or C < 1:
        raise ParseError(*where, f"declared C must be a positive integer, got {C!r}")
    return C


def _make_sequence(rec_id, T, events, where) -> EventSequence:
    try:
        T = float(T)
        times = [float(e[0]) for e in events]
        raw_types = [e[1] for e in events]
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise ParseError(*where, f"malformed record {rec_id!r}: {exc}") from None
    types = []
    for c in raw_types:
        if isinstance(c, bool) or (isinstance(c, float) and not c.is_integer()):
            raise ParseError(*where, f"record {rec_id!r}: event type {c!r} is not an integer")
        c = int(c)
        if c < 1:
            raise ValidationError(f"{where[0]}:{where[1]}: record {rec_id!r}: "
                                  f"event type index {c} < 1")
        types.append(c - 1)
    try:
        return EventSequence(rec_id, T, times, types)
    except ValidationError as exc:
        raise ValidationError(f"{where[0]}:{where[1]}: {exc}") from None


def _finish(seqs, C, path, lines) -> Corpus:
    ids = [s.id for s in seqs]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValidationError(f"{path}: duplicate sequence id {dup!r}")
    if C is None:
        return Corpus.from_sequences(seqs)
    for s, line in zip(seqs, lines):
        if s.M and s.types.max() >= C:
            raise ValidationError(f"{path}:{line}: record {s.id!r}: event type "
                                  f"{int(s.types.max()) + 1} exceeds declared C={C}")
    return Corpus(C, seqs)


def _load_jsonl(path: Path) -> Corpus:
    seqs, lines, C = [], [], None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ParseError(path, lineno, "expected a JSON object")
            if "meta" in rec:
                if seqs or C is not None:
                    raise ParseError(path, lineno, "meta record must be the first line")
                C = _declared_C(rec["meta"], (path, lineno))
                continue
            missing = {"id", "T", "events"} - rec.keys()
            if missing:
                raise ParseError(path, lineno, f"missing field(s) {sorted(missing)}")
            if not isinstance(rec["events"], list):
                raise ParseError(path, lineno, "events must be a list of [t, c] pairs")
            seqs.append(_make_sequence(str(rec["id"]), rec["T"], rec["events"], (path, lineno)))
            lines.append(lineno)
    return _finish(seqs, C, path, lines)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def _load_csv(path: Path) -> Corpus:
    side = sidecar_path(path)
    if not side.exists():
        raise FileNotFoundError(f"{path}: missing horizon sidecar {side}")
    try:
        meta = json.loads(side.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(side, exc.lineno, f"invalid JSON ({exc.msg})") from None
    if not isinstance(meta, dict) or not isinstance(meta.get("T"), dict):
        raise ParseError(side, 1, 'sidecar must be {"T": {id: horizon}, "C": optional}')
    C = _declared_C(meta, (side, 1))
    events = {str(k): [] for k in meta["T"]}
    first_line = {k: 1 for k in events}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "t", "c"]:
            raise ParseError(path, 1, "header must be id,t,c")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) != 3:
                raise ParseError(path, lineno, f"expected 3 columns, got {len(row)}")
            rid = row[0]
            if rid not in events:
                raise ParseError(path, lineno, f"id {rid!r} has no horizon in {side.name}")
            try:
                t = float(row[1])
                c = int(row[2])
            except ValueError:
                raise ParseError(path, lineno, f"malformed row {row!r}") from None
            if not events[rid]:
                first_line[rid] = lineno
            events[rid].append((t, c))
    seqs = [_make_sequence(rid, meta["T"][rid], ev, (path, first_line[rid]))
            for rid, ev in events.items()]
    return _finish(seqs, C, path, [first_line[s.id] for s in seqs])


def load_corpus(path, fmt: str | None = None) -> Corpus:
    """Load and validate a corpus; the format defaults to the file suffix."""
    path = Path(path)
    fmt = _format_of(path, fmt)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    return _load_jsonl(path) if fmt == "jsonl" else _load_csv(path)


def _events_of(seq: EventSequence) -> list:
    return [[float(t), int(c) + 1] for t, c in zip(seq.times, seq.types)]


def save_corpus(corpus: Corpus, path, fmt: str | None = None, header: bool = True) -> None:
    """Write ``corpus``; ``header`` records C explicitly so reloading preserves it."""
    path = Path(path)
    fmt = _format_of(path, fmt)
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            if header:
                fh.write(json.dumps({"meta": {"C": corpus.C}}) + "\n")
            for s in corpus.sequences:
                rec = {"id": s.id, "T": s.T, "events": _events_of(s)}
                fh.write(json.dumps(rec, allow_nan=False) + "\n")
        return
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "t", "c"])
        for s in corpus.sequences:
            for t, c in _events_of(s):
                w.writerow([s.id, repr(t), c])
    meta = {"T": {s.id: s.T for s in corpus.sequences}}
    if header:
        meta["C"] = corpus.C
    sidecar_path(path).write_text(json.dumps(meta, allow_nan=False) + "\n", encoding="utf-8")


def save_labels(labels, path) -> None:
    Path(path).write_text(json.dumps([int(x) for x in labels]) + "\n", encoding="utf-8")


def load_labels(path) -> np.ndarray:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON ({exc.msg})") from None
    if isinstance(data, dict):
        data = data.get("labels")
    if not isinstance(data, list) or not all(isinstance(x, int) and x >= 0 for x in data):
        raise ValidationError(f"{path}: labels must be a list of non-negative integers")
    return np.asarray(data, dtype=np.int64)


# --------------------------------------------------------------------------- models

def model_to_dict(model: MixtureModel) -> dict:
    return {
        "K": model.K,
        "alpha": model.alpha.tolist(),
        "B": model.B.tolist(),
        "Sigma": model.Sigma.tolist(),
        "alpha0": model.alpha0,
        "basis": model.basis.to_dict(),
        "meta": model.meta,
    }


def model_from_dict(d: dict) -> MixtureModel:
    try:
        K = int(d["K"])
        basis = BasisSet.from_dict(d["basis"])
        alpha = np.asarray(d["alpha"], dtype=float)
        B = np.asarray(d["B"], dtype=float)
        Sigma = np.asarray(d["Sigma"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model document: {exc!r}") from None
    if alpha.shape != (K,):
        raise ValidationError(f"alpha has shape {alpha.shape}, expected ({K},)")
    for name, arr in (("alpha", alpha), ("B", B), ("Sigma", Sigma)):
        if arr.size and not np.all(arr > 0):
            raise ValidationError(f"model field {name} has non-positive entries")
    try:
        return MixtureModel(alpha, B, Sigma, basis, float(d.get("alpha0", 1.0)),
                            dict(d.get("meta") or {}))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def save_model(model: MixtureModel, path) -> None:
    model.validate()
    text = json.dumps(model_to_dict(model), allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> MixtureModel:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON ({exc.msg})") from None
    return model_from_dict(d)


def write_json(obj, path) -> None:
    """Deterministic JSON (sorted keys); NaN is written as null."""
    Path(path).write_text(json.dumps(_nan_to_none(obj), sort_keys=True, indent=1,
                                     allow_nan=False) + "\n", encoding="utf-8")


def _nan_to_none(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nan_to_none(v) for v in obj]
    if isinstance(obj, np.generic):
        return _nan_to_none(obj.item())
    if isinstance(obj, np.ndarray):
        return _nan_to_none(obj.tolist())
    return obj
