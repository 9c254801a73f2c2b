#!/usr/bin/env python3
"""Ingest the public transcript releases and print their split statistics.

Point --friends at the per-season JSON release directory and/or --bbt at the
episode-transcript CSV. Writes canonical JSONL files plus split files, and
prints the split statistics tables so they can be eyeballed against the
published counts.
"""

import argparse
from pathlib import Path

from speakerfp.corpus import (
    LabelMap,
    SplitSpec,
    adapt_bbt,
    adapt_friends,
    corpus_stats,
    filter_seasons,
    split,
    write_canonical,
)


def report(name, part, label_map):
    stats = corpus_stats(part, label_map)
    print(
        f"{name:<6s} scenes {part.n_scenes:5d}  turns {part.n_turns:6d}  "
        f"sentence len {stats.mean_sentence_length:5.2f} +/- {stats.std_sentence_length:5.2f}  "
        f"scene len {stats.mean_scene_length:5.2f} +/- {stats.std_scene_length:5.2f}"
    )


def prepare_friends(source: str, out_dir: Path) -> None:
    corpus = adapt_friends(source)
    write_canonical(corpus, out_dir / "friends.jsonl")
    label_map = LabelMap.preset("friends")
    print(f"\nFriends: {corpus.n_scenes} scenes / {corpus.n_turns} turns total")
    restricted = filter_seasons(corpus, range(1, 9))
    splits = split(restricted, SplitSpec.by_season(valid={7}, test={8}))
    for name, part in (("train", splits.train), ("valid", splits.valid), ("test", splits.test)):
        write_canonical(part, out_dir / f"friends-{name}.jsonl")
        report(name, part, label_map)


def prepare_bbt(source: str, out_dir: Path, seed: int) -> None:
    corpus = adapt_bbt(source)
    write_canonical(corpus, out_dir / "bbt.jsonl")
    label_map = LabelMap.preset("bbt")
    print(f"\nBig Bang Theory: {corpus.n_scenes} scenes / {corpus.n_turns} turns total")
    splits = split(corpus, SplitSpec.random_split((0.8, 0.1, 0.1), seed=seed))
    for name, part in (("train", splits.train), ("valid", splits.valid), ("test", splits.test)):
        write_canonical(part, out_dir / f"bbt-{name}.jsonl")
        report(name, part, label_map)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--friends", help="per-season JSON release (file or directory)")
    parser.add_argument("--bbt", help="episode-transcript CSV")
    parser.add_argument("--out-dir", default="corpora")
    parser.add_argument("--seed", type=int, default=0, help="seed for the random BBT split")
    args = parser.parse_args()
    if not args.friends and not args.bbt:
        parser.error("give --friends and/or --bbt")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.friends:
        prepare_friends(args.friends, out_dir)
    if args.bbt:
        prepare_bbt(args.bbt, out_dir, args.seed)


if __name__ == "__main__":
    main()
