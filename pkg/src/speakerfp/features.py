"""Feature activation vectors: word counts or externally produced hidden states.

Activation files use the binary "FFPA" layout: magic bytes FFPA, version u8,
M as u32 little-endian, record count as u64 little-endian, then per record a
u16 little-endian id length, the UTF-8 id bytes, and M float32 little-endian
values. A JSONL alternative {"id": ..., "vec": [...]} is accepted for
debugging; binary is canonical.
"""

from __future__ import annotations

import json
import math
import re
import struct
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ActivationFileError, VocabularyError

MAGIC = b"FFPA"
VERSION = 1

_BRACKETED_RE = re.compile(r"^\[[^\s\[\]]+\]$")


def tokenize(text: str) -> list[str]:
    """Whitespace split; bracketed special tokens stay verbatim, the rest lowercase."""
    return [tok if _BRACKETED_RE.match(tok) else tok.lower() for tok in text.split()]


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    min_freq: int
    max_size: int | None

    @property
    def size(self) -> int:
        return len(self.index)

    def to_dict(self) -> dict:
        terms = [""] * len(self.index)
        for term, i in self.index.items():
            terms[i] = term
        return {"min_freq": self.min_freq, "max_size": self.max_size, "terms": terms}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(
            index={term: i for i, term in enumerate(data["terms"])},
            min_freq=data["min_freq"],
            max_size=data["max_size"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocab(texts: Iterable[str], min_freq: int = 1, max_size: int | None = None) -> Vocabulary:
    """Count terms over training texts; keep the most frequent ones.

    Terms are ordered by (frequency desc, term asc) and truncated to max_size;
    terms under min_freq are dropped. Speaker tokens and [CLS]/[SEP] count as
    ordinary terms. Must be called on the training split only.
    """
    counts: Counter[str] = Counter()
    n_texts = 0
    for text in texts:
        n_texts += 1
        counts.update(tokenize(text))
    if n_texts == 0:
        raise VocabularyError("empty training set")
    kept = sorted(
        ((term, c) for term, c in counts.items() if c >= min_freq),
        key=lambda tc: (-tc[1], tc[0]),
    )
    if max_size is not None:
        kept = kept[:max_size]
    if not kept:
        raise VocabularyError(f"no terms with frequency >= {min_freq}")
    return Vocabulary(index={term: i for i, (term, _) in enumerate(kept)}, min_freq=min_freq, max_size=max_size)


def word_features(text: str, vocab: Vocabulary) -> np.ndarray:
    """Term-count vector over the vocabulary; out-of-vocabulary terms are ignored."""
    values = np.zeros(vocab.size, dtype=np.float64)
    for tok in tokenize(text):
        i = vocab.index.get(tok)
        if i is not None:
            values[i] += 1.0
    return values


# ---------------------------------------------------------------------------
# Activation files
# ---------------------------------------------------------------------------


def write_activations(path: str | Path, records: Iterable[tuple[str, np.ndarray]], dim: int) -> int:
    """Write (sample_id, float32 vector) records in the given order; returns count."""
    rows = []
    for sample_id, vec in records:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (dim,):
            raise ActivationFileError(
                f"record {sample_id!r}: expected {dim} values, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ActivationFileError(f"record {sample_id!r}: non-finite value")
        rows.append((sample_id, arr))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(rows)))
        for sample_id, arr in rows:
            encoded = sample_id.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ActivationFileError(f"record id too long: {sample_id[:40]!r}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(arr.tobytes())
    return len(rows)


def _read_exact(fh, n: int, what: str, record_index: int | None) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ActivationFileError(f"truncated file while reading {what}", record_index)
    return data


def _read_binary(path: str | Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ActivationFileError(f"bad magic bytes {magic!r}; not an activation file")
        (version,) = struct.unpack("<B", _read_exact(fh, 1, "version", None))
        if version != VERSION:
            raise ActivationFileError(f"unsupported activation file version {version}")
        (dim,) = struct.unpack("<I", _read_exact(fh, 4, "dimension", None))
        (count,) = struct.unpack("<Q", _read_exact(fh, 8, "record count", None))
        for i in range(count):
            (id_len,) = struct.unpack("<H", _read_exact(fh, 2, "id length", i))
            sample_id = _read_exact(fh, id_len, "id", i).decode("utf-8")
            raw = _read_exact(fh, 4 * dim, f"vector for {sample_id!r}", i)
            vec = np.frombuffer(raw, dtype="<f4").copy()
            if sample_id in out:
                raise ActivationFileError(f"record {i}: duplicate id {sample_id!r}", i)
            if not np.all(np.isfinite(vec)):
                raise ActivationFileError(f"record {i}: non-finite value in {sample_id!r}", i)
            out[sample_id] = vec
        if fh.read(1):
            raise ActivationFileError(f"trailing bytes after {count} records")
    return out


def _read_jsonl(path: str | Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                sample_id, values = row["id"], row["vec"]
            except (json.JSONDecodeError, TypeError, KeyError):
                raise ActivationFileError(f"record {i}: expected {{'id', 'vec'}} object", i) from None
            vec = np.asarray(values, dtype=np.float32)
            if dim is None:
                dim = vec.shape[0] if vec.ndim == 1 else -1
            if vec.ndim != 1 or vec.shape[0] != dim:
                raise ActivationFileError(f"record {i}: vector length mismatch", i)
            if sample_id in out:
                raise ActivationFileError(f"record {i}: duplicate id {sample_id!r}", i)
            if not np.all(np.isfinite(vec)):
                raise ActivationFileError(f"record {i}: non-finite value in {sample_id!r}", i)
            out[sample_id] = vec
    return out


def read_raw_activations(path: str | Path) -> dict[str, np.ndarray]:
    """Stored float32 vectors exactly as written, no absolute value applied."""
    with open(path, "rb") as fh:
        sniffed = fh.read(64)
    # JSONL is for debugging only; anything not starting with '{' goes down the
    # binary path so corrupt binary files fail with the magic-byte diagnostic.
    if sniffed.lstrip().startswith(b"{") and not sniffed.startswith(MAGIC):
        out = _read_jsonl(path)
    else:
        out = _read_binary(path)
    if not out:
        warnings.warn(f"activation file {path} holds no records", stacklevel=2)
    return out


def read_activations(path: str | Path) -> dict[str, np.ndarray]:
    """Load activations as non-negative float64 vectors.

    The element-wise absolute value is applied here, on load, so downstream
    accumulation always sees magnitudes.
    """
    return {k: np.abs(v.astype(np.float64)) for k, v in read_raw_activations(path).items()}
