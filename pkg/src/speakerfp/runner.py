"""End-to-end run orchestration: corpus -> assemble -> features -> library ->
classification -> metrics, with every artifact written into one output directory.

Stages run sequentially and any module error is re-raised as a StageError so
the CLI can say which stage failed. Identical configs over identical inputs
produce byte-identical artifacts.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path

from . import evaluation
from .config import RunConfig
from .corpus import (
    apply_labels,
    assemble_samples,
    filter_seasons,
    parse_canonical,
    split,
    write_samples,
)
from .errors import ConfigError, SpeakerFpError, StageError
from .features import build_vocab, read_activations
from .fingerprint import build_library, detect_generic, save_library

ARTIFACTS = (
    "samples-train.jsonl",
    "samples-test.jsonl",
    "library.json",
    "classifications.jsonl",
    "metrics.json",
    "config.json",
)


@contextmanager
def _stage(name: str):
    try:
        yield
    except SpeakerFpError as exc:
        raise StageError(name, exc) from exc


def write_classifications(results, verdicts, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            verdict = verdicts[r.sample_id]
            fh.write(
                json.dumps(
                    {
                        "id": r.sample_id,
                        "gold": r.gold,
                        "pred": r.predicted,
                        "scores": {label: r.scores[label] for label in sorted(r.scores)},
                        "margin_top2": r.margin_top2,
                        "generic": {
                            "top_n": verdict.top_n,
                            "tau": verdict.tau,
                            "flag": verdict.is_generic,
                        },
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def run(config: RunConfig) -> Path:
    """Execute one configured run; returns the artifact directory."""
    if not config.corpus:
        raise ConfigError("config needs a corpus path")
    if not config.output_dir:
        raise ConfigError("config needs an output directory")
    out = Path(config.output_dir)
    if out.exists() and any(out.iterdir()):
        raise ConfigError(f"output directory {out} is not empty; runs own their directory")
    out.mkdir(parents=True, exist_ok=True)

    with _stage("corpus"):
        label_map = config.label_map.to_map()
        corpus = parse_canonical(config.corpus)
        if config.split.seasons is not None:
            corpus = filter_seasons(corpus, config.split.seasons)
        corpus = apply_labels(corpus, label_map)
        splits = split(corpus, config.split.to_spec())

    with _stage("assemble"):
        train = assemble_samples(
            splits.train, config.max_previous_context, config.include_speaker_tokens
        )
        valid = assemble_samples(
            splits.valid, config.max_previous_context, config.include_speaker_tokens
        )
        test = assemble_samples(
            splits.test, config.max_previous_context, config.include_speaker_tokens
        )

    with _stage("features"):
        activations = None
        if config.feature_mode == "activations":
            if not config.activation_file:
                raise ConfigError("activation mode needs an activation_file path")
            try:
                activations = read_activations(config.activation_file)
            except OSError as exc:
                raise ConfigError(f"cannot read activation file: {exc}") from None
        vocab = None
        if config.feature_mode == "word":
            vocab = build_vocab(
                (s.input_text for s in train),
                min_freq=config.vocab_min_freq,
                max_size=config.vocab_max_size,
            )
        train_vectors = evaluation.featurize(
            train, config.feature_mode, vocab=vocab, activations=activations
        )
        test_vectors = evaluation.featurize(
            test, config.feature_mode, vocab=vocab, activations=activations
        )

    with _stage("fingerprint"):
        train_labels = {s.sample_id: s.label for s in train}
        library = build_library(
            train_vectors, train_labels, config.k, config.membership, config.N
        )

    with _stage("classify"):
        golds = {s.sample_id: s.label for s in test}
        results, featureless = evaluation.classify_samples(test_vectors, golds, library)
        verdicts = {r.sample_id: detect_generic(r, config.top_n, config.tau) for r in results}

    with _stage("eval"):
        report = evaluation.score(
            results, labels=label_map.labels, n_featureless=len(featureless)
        )

    with _stage("write"):
        write_samples(train, out / "samples-train.jsonl")
        if valid:
            write_samples(valid, out / "samples-valid.jsonl")
        write_samples(test, out / "samples-test.jsonl")
        if vocab is not None:
            vocab.save(out / "vocab.json")
        save_library(library, out / "library.json")
        write_classifications(results, verdicts, out / "classifications.jsonl")
        (out / "metrics.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        evaluation.write_confusion_csv(report, out / "confusion.csv")
        (out / "config.json").write_text(config.to_json(), encoding="utf-8")
    return out
