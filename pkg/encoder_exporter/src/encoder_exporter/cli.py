"""CLI: fine-tune a speaker classifier and export activations.

    encoder-exporter train --samples train.jsonl --checkpoint ckpt/ \
        --encoder roberta-base --epochs 3 --batch-size 16 --learning-rate 2e-5
    encoder-exporter export --checkpoint ckpt/ --samples test.jsonl \
        --out test.ffpa [--predictions-out preds.jsonl]

`--encoder from-scratch` trains a small word-level transformer on the samples
themselves, which needs no downloads and exists for offline smoke runs.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ExporterError
from .export import export_activations
from .finetune import Hyperparameters, finetune
from .samples import read_samples


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="encoder-exporter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune on assembled training samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--valid-samples")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--encoder", default="roberta-base")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=2e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-length", type=int, default=256)

    p = sub.add_parser("export", help="write pooled hidden states as FFPA")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--predictions-out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            hp = Hyperparameters(
                encoder=args.encoder,
                epochs=args.epochs,
                batch_size=args.batch_size,
                learning_rate=args.learning_rate,
                seed=args.seed,
                max_length=args.max_length,
            )
            train = read_samples(args.samples)
            valid = read_samples(args.valid_samples) if args.valid_samples else None
            finetune(train, hp, args.checkpoint, valid)
            print(f"checkpoint written to {args.checkpoint}")
        else:
            manifest = export_activations(
                args.checkpoint,
                args.samples,
                args.out,
                batch_size=args.batch_size,
                predictions_path=args.predictions_out,
            )
            print(f"wrote {manifest['n_records']} records of dim {manifest['dim']} to {args.out}")
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
