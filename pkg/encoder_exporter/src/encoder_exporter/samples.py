"""Assembled-sample JSONL consumption.

The classifier toolkit emits one sample per line:
    {"id": ..., "label": ..., "text": "[CLS] ... [SEP]", "context_used": n,
     "target_len": m}
This module reads that wire format; nothing here imports the classifier
package.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ExporterError

SPEAKER_TOKEN_RE = re.compile(r"\[[A-Z0-9_]+\]")
MARKERS = {"[CLS]", "[SEP]"}


@dataclass(frozen=True)
class Sample:
    sample_id: str
    text: str
    label: str
    context_used: int


def read_samples(path: str | Path) -> list[Sample]:
    samples = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                sample = Sample(
                    sample_id=row["id"],
                    text=row["text"],
                    label=row["label"],
                    context_used=row["context_used"],
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise ExporterError(f"{path}: line {line_no}: bad sample record: {exc}") from None
            if sample.sample_id in seen:
                raise ExporterError(f"{path}: line {line_no}: duplicate id {sample.sample_id!r}")
            seen.add(sample.sample_id)
            samples.append(sample)
    if not samples:
        raise ExporterError(f"{path}: no samples")
    return samples


def speaker_tokens_in(samples: list[Sample]) -> list[str]:
    """All bracketed speaker tokens occurring in the sample texts, sorted."""
    tokens = set()
    for s in samples:
        tokens.update(SPEAKER_TOKEN_RE.findall(s.text))
    return sorted(tokens - MARKERS)


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
