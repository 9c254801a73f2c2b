"""Metrics and analysis sweeps: F1/accuracy/confusion, fingerprint-size and
context-size curves, utterance-length histograms, generic-removal curves.

All percentages are on the 0-100 scale and written to CSV with two decimals.
Featureless samples (all-zero word vectors) are excluded from accuracy and
reported separately so headline numbers stay honest about coverage.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import AssembledSample, Corpus, assemble_samples
from .errors import EvalError, FeaturelessSampleError
from .features import Vocabulary, build_vocab, read_activations, word_features
from .fingerprint import (
    ClassificationResult,
    FingerprintLibrary,
    build_library,
    classify_vector,
    detect_generic,
)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    weighted_f1: float
    per_class_f1: dict[str, float]
    labels: tuple[str, ...]
    confusion: np.ndarray  # rows = gold, cols = predicted
    n_samples: int
    n_featureless: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": round(self.accuracy, 2),
            "macro_f1": round(self.macro_f1, 2),
            "weighted_f1": round(self.weighted_f1, 2),
            "per_class_f1": {label: round(f1, 2) for label, f1 in self.per_class_f1.items()},
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "n_samples": self.n_samples,
            "n_featureless": self.n_featureless,
        }


def score(
    results: Sequence[ClassificationResult],
    labels: Sequence[str] | None = None,
    n_featureless: int = 0,
) -> MetricsReport:
    """Multi-class accuracy, per-class F1, macro/weighted F1, confusion counts.

    Per-class F1 is the harmonic mean of precision and recall, 0 when the
    denominator is 0. Weighted F1 weights by gold support, so classes that
    never occur as gold contribute nothing to it (but still drag the macro).
    """
    if not results:
        raise EvalError("empty result list")
    golds, preds = [], []
    for r in results:
        if r.gold is None:
            raise EvalError(f"result {r.sample_id!r} carries no gold label")
        golds.append(r.gold)
        preds.append(r.predicted)
    if labels is None:
        labels = sorted(set(golds) | set(preds))
    else:
        labels = list(labels)
        unknown = (set(golds) | set(preds)) - set(labels)
        if unknown:
            raise EvalError(f"labels outside the declared label set: {sorted(unknown)}")
    index = {label: i for i, label in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(golds, preds):
        confusion[index[g], index[p]] += 1
    supports = confusion.sum(axis=1)
    predicted_counts = confusion.sum(axis=0)
    per_class_f1: dict[str, float] = {}
    for label, i in index.items():
        tp = confusion[i, i]
        precision = tp / predicted_counts[i] if predicted_counts[i] else 0.0
        recall = tp / supports[i] if supports[i] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class_f1[label] = 100.0 * f1
    total = int(confusion.sum())
    weighted = (
        float(sum(per_class_f1[label] * supports[index[label]] for label in labels) / supports.sum())
        if supports.sum()
        else 0.0
    )
    return MetricsReport(
        accuracy=100.0 * float(np.trace(confusion)) / total,
        macro_f1=float(np.mean(list(per_class_f1.values()))),
        weighted_f1=weighted,
        per_class_f1=per_class_f1,
        labels=tuple(labels),
        confusion=confusion,
        n_samples=total,
        n_featureless=n_featureless,
    )


# ---------------------------------------------------------------------------
# Shared pipeline machinery
# ---------------------------------------------------------------------------


def featurize(
    samples: Sequence[AssembledSample],
    mode: str,
    vocab: Vocabulary | None = None,
    activations: Mapping[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Vector per sample_id, from word counts or a preloaded activation map."""
    if mode == "word":
        if vocab is None:
            raise EvalError("word mode needs a vocabulary")
        return {s.sample_id: word_features(s.input_text, vocab) for s in samples}
    if mode == "activations":
        if activations is None:
            raise EvalError("activation mode needs a loaded activation map")
        missing = [s.sample_id for s in samples if s.sample_id not in activations]
        if missing:
            raise EvalError(
                f"{len(missing)} samples missing from the activation file, first {missing[0]!r}"
            )
        return {s.sample_id: activations[s.sample_id] for s in samples}
    raise EvalError(f"unknown feature mode {mode!r}")


def classify_samples(
    test_vectors: Mapping[str, np.ndarray],
    golds: Mapping[str, str],
    library: FingerprintLibrary,
) -> tuple[list[ClassificationResult], list[str]]:
    """Classify every vector in sample_id order; featureless ids are set aside."""
    results: list[ClassificationResult] = []
    featureless: list[str] = []
    for sample_id in sorted(test_vectors):
        try:
            results.append(
                classify_vector(
                    test_vectors[sample_id], library,
                    sample_id=sample_id, gold=golds.get(sample_id),
                )
            )
        except FeaturelessSampleError:
            featureless.append(sample_id)
    return results, featureless


@dataclass(frozen=True)
class PipelineOutcome:
    report: MetricsReport
    results: list[ClassificationResult]
    featureless_ids: list[str]
    library: FingerprintLibrary
    vocab: Vocabulary | None


def evaluate_split(
    train_samples: Sequence[AssembledSample],
    test_samples: Sequence[AssembledSample],
    *,
    size: int,
    membership: str = "pareto80_20",
    norm: float | None = None,
    mode: str = "word",
    vocab_min_freq: int = 1,
    vocab_max_size: int | None = None,
    activations: Mapping[str, np.ndarray] | None = None,
    labels: Sequence[str] | None = None,
) -> PipelineOutcome:
    """Featurize, build the library from training samples, classify, score."""
    vocab = None
    if mode == "word":
        vocab = build_vocab(
            (s.input_text for s in train_samples),
            min_freq=vocab_min_freq,
            max_size=vocab_max_size,
        )
    train_vectors = featurize(train_samples, mode, vocab=vocab, activations=activations)
    test_vectors = featurize(test_samples, mode, vocab=vocab, activations=activations)
    train_labels = {s.sample_id: s.label for s in train_samples}
    library = build_library(train_vectors, train_labels, size, membership, norm)
    golds = {s.sample_id: s.label for s in test_samples}
    results, featureless = classify_samples(test_vectors, golds, library)
    report = score(results, labels=labels, n_featureless=len(featureless))
    return PipelineOutcome(report, results, featureless, library, vocab)


# ---------------------------------------------------------------------------
# Sweeps and analysis artifacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    value: int
    report: MetricsReport


def sweep_k(
    train_vectors: Mapping[str, np.ndarray],
    train_labels: Mapping[str, str],
    test_vectors: Mapping[str, np.ndarray],
    golds: Mapping[str, str],
    sizes: Sequence[int],
    membership: str = "pareto80_20",
    norm: float | None = None,
) -> list[SweepPoint]:
    """One library build and evaluation per fingerprint size."""
    points = []
    for size in sorted(set(sizes)):
        library = build_library(train_vectors, train_labels, size, membership, norm)
        results, featureless = classify_samples(test_vectors, golds, library)
        points.append(SweepPoint(size, score(results, n_featureless=len(featureless))))
    return points


def sweep_context(
    train_corpus: Corpus,
    test_corpus: Corpus,
    context_sizes: Sequence[int],
    *,
    size: int,
    include_speaker_tokens: bool = True,
    membership: str = "pareto80_20",
    norm: float | None = None,
    mode: str = "word",
    vocab_min_freq: int = 1,
    vocab_max_size: int | None = None,
    activation_files: Mapping[int, str | Path] | None = None,
) -> list[SweepPoint]:
    """Full assemble-featurize-build-classify-score run per context size.

    Word mode is self-contained; activation mode needs one activation file per
    requested context size (vectors differ per assembly).
    """
    points = []
    for context in sorted(set(context_sizes)):
        activations = None
        if mode == "activations":
            if activation_files is None or context not in activation_files:
                raise EvalError(f"no activation file for context size {context}")
            activations = read_activations(activation_files[context])
        outcome = evaluate_split(
            assemble_samples(train_corpus, context, include_speaker_tokens),
            assemble_samples(test_corpus, context, include_speaker_tokens),
            size=size,
            membership=membership,
            norm=norm,
            mode=mode,
            vocab_min_freq=vocab_min_freq,
            vocab_max_size=vocab_max_size,
            activations=activations,
        )
        points.append(SweepPoint(context, outcome.report))
    return points


def length_histogram(
    results: Sequence[ClassificationResult],
    lengths: Mapping[str, int],
    bin_width: int = 1,
    cap: int = 25,
) -> list[tuple[int, float, float]]:
    """Relative-frequency histograms of target length, split correct/incorrect.

    Each group is normalized over its own total; lengths beyond the cap count
    in the top bin. Rows are (bin start, correct_freq, incorrect_freq).
    """
    if bin_width < 1:
        raise EvalError("bin width must be >= 1")
    correct: Counter[int] = Counter()
    incorrect: Counter[int] = Counter()
    for r in results:
        if r.gold is None:
            raise EvalError(f"result {r.sample_id!r} carries no gold label")
        length = min(lengths[r.sample_id], cap)
        bucket = (length // bin_width) * bin_width
        (correct if r.predicted == r.gold else incorrect)[bucket] += 1
    n_correct = sum(correct.values())
    n_incorrect = sum(incorrect.values())
    rows = []
    for start in range(0, cap + 1, bin_width):
        rows.append(
            (
                start,
                correct[start] / n_correct if n_correct else 0.0,
                incorrect[start] / n_incorrect if n_incorrect else 0.0,
            )
        )
    return rows


@dataclass(frozen=True)
class GenericCurvePoint:
    tau: float
    top_n: int
    n_removed: int
    accuracy: float | None  # None when nothing remains


def generic_curve(
    results: Sequence[ClassificationResult],
    top_n: int,
    taus: Sequence[float],
) -> list[GenericCurvePoint]:
    """Accuracy on the remainder after removing generic-flagged samples, per tau."""
    if not list(taus):
        raise EvalError("tau grid is empty")
    points = []
    for tau in sorted(taus):
        remaining = [r for r in results if not detect_generic(r, top_n, tau).is_generic]
        accuracy = score(remaining).accuracy if remaining else None
        points.append(GenericCurvePoint(tau, top_n, len(results) - len(remaining), accuracy))
    return points


# ---------------------------------------------------------------------------
# CSV emission (figures belong to notebooks; these artifacts feed them)
# ---------------------------------------------------------------------------


def _open_csv(path: str | Path):
    return open(path, "w", encoding="utf-8", newline="")


def write_k_sweep_csv(points: Sequence[SweepPoint], path: str | Path) -> None:
    with _open_csv(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "accuracy"])
        for p in points:
            writer.writerow([p.value, f"{p.report.accuracy:.2f}"])


def write_context_sweep_csv(points: Sequence[SweepPoint], path: str | Path) -> None:
    with _open_csv(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["context", "macro_f1", "weighted_f1", "accuracy"])
        for p in points:
            writer.writerow(
                [
                    p.value,
                    f"{p.report.macro_f1:.2f}",
                    f"{p.report.weighted_f1:.2f}",
                    f"{p.report.accuracy:.2f}",
                ]
            )


def write_histogram_csv(rows: Sequence[tuple[int, float, float]], path: str | Path) -> None:
    with _open_csv(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["length", "correct_freq", "incorrect_freq"])
        for start, c, i in rows:
            writer.writerow([start, f"{c:.6f}", f"{i:.6f}"])


def write_generic_csv(points: Sequence[GenericCurvePoint], path: str | Path) -> None:
    with _open_csv(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau", "top_n", "removed", "accuracy"])
        for p in points:
            writer.writerow(
                [
                    repr(p.tau),
                    p.top_n,
                    p.n_removed,
                    "" if p.accuracy is None else f"{p.accuracy:.2f}",
                ]
            )


def write_confusion_csv(report: MetricsReport, path: str | Path) -> None:
    with _open_csv(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gold\\predicted", *report.labels])
        for i, label in enumerate(report.labels):
            writer.writerow([label, *report.confusion[i].tolist()])
