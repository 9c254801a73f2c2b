#!/usr/bin/env python3
"""Benchmark the fingerprint classifier on the two synthetic corpora.

Runs the exclusive-vocabulary corpus across fingerprint sizes and the
turn-taking corpus across context sizes, printing the accuracy tables and
writing the CSVs next to --out-dir.
"""

import argparse
from pathlib import Path

from speakerfp.corpus import SplitSpec, apply_labels, assemble_samples, split
from speakerfp.evaluation import (
    evaluate_split,
    sweep_context,
    sweep_k,
    write_context_sweep_csv,
    write_k_sweep_csv,
)
from speakerfp.features import build_vocab
from speakerfp.evaluation import featurize
from speakerfp.synthetic import exclusive_vocabulary_corpus, turn_taking_corpus


def fingerprint_size_table(out_dir: Path, seed: int) -> None:
    corpus, label_map = exclusive_vocabulary_corpus(n_scenes=80, seed=seed)
    labeled = apply_labels(corpus, label_map)
    splits = split(labeled, SplitSpec.random_split((0.8, 0.0, 0.2), seed=seed))
    train = assemble_samples(splits.train, 0)
    test = assemble_samples(splits.test, 0)
    vocab = build_vocab(s.input_text for s in train)
    train_vectors = featurize(train, "word", vocab=vocab)
    test_vectors = featurize(test, "word", vocab=vocab)
    points = sweep_k(
        train_vectors,
        {s.sample_id: s.label for s in train},
        test_vectors,
        {s.sample_id: s.label for s in test},
        sizes=[1, 2, 5, 10, 20, 50, 100, vocab.size],
    )
    write_k_sweep_csv(points, out_dir / "synthetic_k_sweep.csv")
    print("\nexclusive-vocabulary corpus, accuracy by fingerprint size")
    print("k      accuracy")
    for p in points:
        print(f"{p.value:<6d} {p.report.accuracy:6.2f}")


def context_size_table(out_dir: Path, seed: int) -> None:
    corpus, label_map = turn_taking_corpus(n_scenes=80, seed=seed)
    labeled = apply_labels(corpus, label_map)
    splits = split(labeled, SplitSpec.random_split((0.8, 0.0, 0.2), seed=seed))
    points = sweep_context(splits.train, splits.test, [0, 1, 2, 3], size=50)
    write_context_sweep_csv(points, out_dir / "synthetic_context_sweep.csv")
    print("\nturn-taking corpus, metrics by context size")
    print("context  macro-F1  weighted-F1  accuracy")
    for p in points:
        print(
            f"{p.value:<8d} {p.report.macro_f1:8.2f} {p.report.weighted_f1:11.2f} "
            f"{p.report.accuracy:8.2f}"
        )


def ablation_table(seed: int) -> None:
    corpus, label_map = turn_taking_corpus(n_scenes=80, seed=seed)
    labeled = apply_labels(corpus, label_map)
    splits = split(labeled, SplitSpec.random_split((0.8, 0.0, 0.2), seed=seed))
    print("\nturn-taking corpus, speaker-token ablation at context 2")
    for tokens in (True, False):
        outcome = evaluate_split(
            assemble_samples(splits.train, 2, include_speaker_tokens=tokens),
            assemble_samples(splits.test, 2, include_speaker_tokens=tokens),
            size=50,
        )
        name = "with tokens" if tokens else "without tokens"
        print(f"{name:<16s} accuracy {outcome.report.accuracy:6.2f}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="bench-out")
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fingerprint_size_table(out_dir, args.seed)
    context_size_table(out_dir, args.seed)
    ablation_table(args.seed)
    print(f"\nCSVs written to {out_dir}/")


if __name__ == "__main__":
    main()
