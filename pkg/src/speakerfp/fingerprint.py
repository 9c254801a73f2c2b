"""Class-level fuzzy fingerprints and the similarity kernel that classifies with them.

A fingerprint is the top-k most activated feature indices of a class's
accumulated activation vector, each carrying a rank-based membership value in
(0, 1]. A query gets its own single-sample fingerprint and is scored against
every class by aggregating element-wise minimum memberships over the feature
universe, divided by a normalization constant (k unless overridden):

    score(sample, class) = sum_v min(mu_v(sample), mu_v(class)) / N

with mu_v = 0 for features outside a fingerprint. The predicted class is the
highest-scoring one, ties broken by ascending class name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import FeaturelessSampleError, FingerprintError

LIBRARY_FORMAT_VERSION = 1

MembershipFn = Callable[[int, int], float]


def pareto_membership(rank: int, size: int) -> float:
    """Piecewise-linear 80/20 membership for a 0-based rank inside a fingerprint.

    The top ceil(0.2*size) ranks fall linearly from 1.0 towards 0.2; the
    remaining ranks fall linearly from 0.2 towards (but never reaching) 0.
    """
    _check_rank(rank, size)
    head = math.ceil(0.2 * size)
    if rank < head:
        return 1.0 - 0.8 * rank / head
    return 0.2 * (1.0 - (rank - head) / (size - head))


def linear_membership(rank: int, size: int) -> float:
    """Straight-line fallback used for sensitivity checks."""
    _check_rank(rank, size)
    return 1.0 - rank / size


def _check_rank(rank: int, size: int) -> None:
    if size <= 0:
        raise FingerprintError(f"fingerprint size must be positive, got {size}")
    if not 0 <= rank < size:
        raise FingerprintError(f"rank {rank} outside fingerprint of size {size}")


MEMBERSHIP_FUNCTIONS: dict[str, MembershipFn] = {
    "pareto80_20": pareto_membership,
    "linear": linear_membership,
}


def _resolve_membership(membership: str | MembershipFn) -> tuple[str, MembershipFn]:
    if callable(membership):
        return getattr(membership, "__name__", "custom"), membership
    try:
        return membership, MEMBERSHIP_FUNCTIONS[membership]
    except KeyError:
        raise FingerprintError(
            f"unknown membership function {membership!r}; available: {sorted(MEMBERSHIP_FUNCTIONS)}"
        ) from None


@dataclass(frozen=True)
class ClassAccumulator:
    """Element-wise float64 sum of a class's feature vectors."""

    label: str
    values: np.ndarray
    n_samples: int


def accumulate(label: str, vectors: Sequence[np.ndarray]) -> ClassAccumulator:
    """Sum vectors in the given order in float64; order is part of the contract."""
    if not vectors:
        raise FingerprintError(f"class {label!r}: no vectors to accumulate")
    first = np.asarray(vectors[0], dtype=np.float64)
    if first.ndim != 1:
        raise FingerprintError(f"class {label!r}: vectors must be one-dimensional")
    total = np.zeros_like(first)
    for i, vec in enumerate(vectors):
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != total.shape:
            raise FingerprintError(
                f"class {label!r}: vector {i} has length {arr.shape}, expected {total.shape}"
            )
        total += arr
    return ClassAccumulator(label=label, values=total, n_samples=len(vectors))


def rank_units(values: np.ndarray) -> np.ndarray:
    """Feature indices from most to least activated; ties break by ascending index."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise FingerprintError("rank_units expects a one-dimensional vector")
    if not np.all(np.isfinite(v)):
        raise FingerprintError("rank_units expects finite values")
    if np.any(v < 0):
        raise FingerprintError("rank_units expects non-negative values")
    return np.argsort(-v, kind="stable")


@dataclass(frozen=True)
class FuzzyFingerprint:
    """Top-ranked feature indices with their memberships; one per class or sample."""

    entries: tuple[tuple[int, float], ...]
    size: int
    dim: int
    label: str | None = None

    def __post_init__(self):
        if self.size <= 0:
            raise FingerprintError("fingerprint size must be positive")
        if len(self.entries) > self.size:
            raise FingerprintError("more entries than the fingerprint size allows")
        seen = set()
        previous = None
        for index, mu in self.entries:
            if not 0 <= index < self.dim:
                raise FingerprintError(f"feature index {index} outside dimension {self.dim}")
            if index in seen:
                raise FingerprintError(f"duplicate feature index {index}")
            seen.add(index)
            if not 0.0 < mu <= 1.0:
                raise FingerprintError(f"membership {mu} outside (0, 1]")
            if previous is not None and mu > previous:
                raise FingerprintError("memberships must be non-increasing along the ranking")
            previous = mu

    def memberships(self) -> dict[int, float]:
        return dict(self.entries)


def build_fingerprint(
    accumulator: ClassAccumulator,
    size: int,
    membership: str | MembershipFn = "pareto80_20",
) -> FuzzyFingerprint:
    """Keep the top min(size, M) ranked units of the accumulated vector.

    The effective size is capped at the feature dimensionality, so requesting
    more units than exist saturates cleanly. Zero-activation units are never
    salient and stay outside the fingerprint (membership 0): with sparse
    word-count vectors they would otherwise enter on index tie-breaks alone
    and manufacture overlap on features the class never produced.
    """
    if size <= 0:
        raise FingerprintError(f"fingerprint size must be positive, got {size}")
    dim = accumulator.values.shape[0]
    effective = min(size, dim)
    _, fn = _resolve_membership(membership)
    active = int(np.count_nonzero(accumulator.values))
    order = rank_units(accumulator.values)[: min(effective, active)]
    entries = tuple((int(idx), fn(rank, effective)) for rank, idx in enumerate(order))
    return FuzzyFingerprint(entries=entries, size=effective, dim=dim, label=accumulator.label)


def sample_fingerprint(
    vector: np.ndarray,
    size: int,
    membership: str | MembershipFn = "pareto80_20",
) -> FuzzyFingerprint:
    """Fingerprint of a single query vector; all-zero vectors are rejected."""
    arr = np.asarray(vector, dtype=np.float64)
    if arr.ndim != 1:
        raise FingerprintError("sample vector must be one-dimensional")
    if not np.any(arr):
        raise FeaturelessSampleError("featureless sample: all feature activations are zero")
    acc = accumulate("", [arr])
    fp = build_fingerprint(acc, size, membership)
    return FuzzyFingerprint(entries=fp.entries, size=fp.size, dim=fp.dim, label=None)


def similarity(a: FuzzyFingerprint, b: FuzzyFingerprint, norm: float | None = None) -> float:
    """Aggregated min-membership overlap of two fingerprints, divided by norm.

    norm defaults to the shared fingerprint size, which bounds the score to
    [0, 1]. The min T-norm makes this symmetric.
    """
    if a.size != b.size:
        raise FingerprintError(f"fingerprint size mismatch: {a.size} vs {b.size}")
    if a.dim != b.dim:
        raise FingerprintError(f"feature dimension mismatch: {a.dim} vs {b.dim}")
    n = a.size if norm is None else norm
    if n <= 0:
        raise FingerprintError("normalization constant must be positive")
    other = b.memberships()
    mins = []
    for index, mu in a.entries:
        mu_b = other.get(index)
        if mu_b is not None:
            mins.append(mu if mu <= mu_b else mu_b)
    # fsum is correctly rounded, so the score is independent of iteration
    # order: symmetry and permutation equivariance hold bit-exactly
    return math.fsum(mins) / n


@dataclass(frozen=True)
class FingerprintLibrary:
    """All class fingerprints built from one training run, sharing size and membership."""

    size: int
    membership_id: str
    norm: float
    dim: int
    fingerprints: dict[str, FuzzyFingerprint]

    def __post_init__(self):
        for label, fp in self.fingerprints.items():
            if fp.size != self.size or fp.dim != self.dim:
                raise FingerprintError(f"fingerprint for {label!r} disagrees with library shape")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.fingerprints)


def build_library(
    vectors: Mapping[str, np.ndarray],
    labels: Mapping[str, str],
    size: int,
    membership: str | MembershipFn = "pareto80_20",
    norm: float | None = None,
) -> FingerprintLibrary:
    """Accumulate per class over sample_id-ascending order and fingerprint each class.

    The fixed accumulation order makes builds bit-reproducible despite
    floating-point non-associativity. Gold labels of later queries are never
    consulted; this sees training data only.
    """
    if not vectors:
        raise FingerprintError("no training vectors")
    membership_id, fn = _resolve_membership(membership)
    by_class: dict[str, list[np.ndarray]] = {}
    for sample_id in sorted(vectors):
        try:
            label = labels[sample_id]
        except KeyError:
            raise FingerprintError(f"no label for training sample {sample_id!r}") from None
        by_class.setdefault(label, []).append(vectors[sample_id])
    fingerprints: dict[str, FuzzyFingerprint] = {}
    for label in sorted(by_class):
        fingerprints[label] = build_fingerprint(accumulate(label, by_class[label]), size, fn)
    effective = next(iter(fingerprints.values())).size
    dim = next(iter(fingerprints.values())).dim
    return FingerprintLibrary(
        size=effective,
        membership_id=membership_id,
        norm=float(effective if norm is None else norm),
        dim=dim,
        fingerprints=fingerprints,
    )


@dataclass(frozen=True)
class ClassificationResult:
    sample_id: str
    scores: dict[str, float]
    predicted: str
    margin_top2: float
    gold: str | None = None


def classify(
    fp: FuzzyFingerprint,
    library: FingerprintLibrary,
    sample_id: str = "",
    gold: str | None = None,
) -> ClassificationResult:
    """Score the sample against every class; argmax wins, ascending-name tie-break."""
    if not library.fingerprints:
        raise FingerprintError("classification against an empty library")
    scores = {
        label: similarity(fp, class_fp, library.norm)
        for label, class_fp in library.fingerprints.items()
    }
    predicted = min(scores, key=lambda label: (-scores[label], label))
    ordered = sorted(scores.values(), reverse=True)
    margin = ordered[0] - ordered[1] if len(ordered) > 1 else ordered[0]
    return ClassificationResult(
        sample_id=sample_id,
        scores=scores,
        predicted=predicted,
        margin_top2=margin,
        gold=gold,
    )


def classify_vector(
    vector: np.ndarray,
    library: FingerprintLibrary,
    sample_id: str = "",
    gold: str | None = None,
) -> ClassificationResult:
    """Build the sample fingerprint with the library's parameters, then classify."""
    fp = sample_fingerprint(vector, library.size, library.membership_id)
    return classify(fp, library, sample_id=sample_id, gold=gold)


@dataclass(frozen=True)
class GenericVerdict:
    """Whether a sample's top scores sit close enough to call it speaker-agnostic."""

    sample_id: str
    top_n: int
    tau: float
    is_generic: bool


def detect_generic(result: ClassificationResult, top_n: int, tau: float) -> GenericVerdict:
    """Flag the sample when the gap between the best and top_n-th score is <= tau."""
    if top_n not in (2, 3, 4):
        raise FingerprintError(f"top_n must be 2, 3, or 4, got {top_n}")
    if tau < 0:
        raise FingerprintError(f"tau must be >= 0, got {tau}")
    if len(result.scores) < top_n:
        raise FingerprintError(
            f"need at least {top_n} classes for a top-{top_n} verdict, have {len(result.scores)}"
        )
    ordered = sorted(result.scores.values(), reverse=True)
    return GenericVerdict(
        sample_id=result.sample_id,
        top_n=top_n,
        tau=tau,
        is_generic=(ordered[0] - ordered[top_n - 1]) <= tau,
    )


# ---------------------------------------------------------------------------
# Library persistence
# ---------------------------------------------------------------------------


def save_library(library: FingerprintLibrary, path: str | Path) -> None:
    payload = {
        "version": LIBRARY_FORMAT_VERSION,
        "k": library.size,
        "membership": library.membership_id,
        "N": library.norm,
        "M": library.dim,
        "classes": {
            label: [[index, mu] for index, mu in fp.entries]
            for label, fp in sorted(library.fingerprints.items())
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_library(path: str | Path) -> FingerprintLibrary:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    version = data.get("version")
    if version != LIBRARY_FORMAT_VERSION:
        raise FingerprintError(f"unsupported library version {version!r}")
    try:
        fingerprints = {
            label: FuzzyFingerprint(
                entries=tuple((int(i), float(mu)) for i, mu in entries),
                size=data["k"],
                dim=data["M"],
                label=label,
            )
            for label, entries in data["classes"].items()
        }
        return FingerprintLibrary(
            size=data["k"],
            membership_id=data["membership"],
            norm=float(data["N"]),
            dim=data["M"],
            fingerprints=fingerprints,
        )
    except KeyError as exc:
        raise FingerprintError(f"library file missing field {exc.args[0]!r}") from None
