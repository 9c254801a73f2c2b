#!/usr/bin/env python3
"""Full-corpus benchmark: fine-tune on real transcripts and measure everything
the acceptance suite's full-corpus test asserts.

Needs the classifier package installed, the canonical corpus prepared (see its
`speakerfp ingest`/`split` commands), and realistic hardware: fine-tuning a
base-size encoder on ~44k samples is a GPU job.

    python3 scripts/full_benchmark.py \
        --train train-samples.jsonl --valid valid-samples.jsonl \
        --test test-samples.jsonl --encoder roberta-base \
        --epochs 3 --batch-size 16 --learning-rate 2e-5 \
        --out results/

Writes results/results.json with the fields the acceptance test reads:
finetuned_accuracy, finetuned_accuracy_no_tokens, ffp_k409_accuracy,
k_sweep_accuracy. Point ENCODER_EXPORTER_RESULTS at it to activate the test.
"""

import argparse
import json
import re
from pathlib import Path

from encoder_exporter.export import export_activations
from encoder_exporter.finetune import Hyperparameters, evaluate_accuracy, finetune, load_checkpoint
from encoder_exporter.samples import read_samples

from speakerfp.corpus import read_samples as read_consumer_samples
from speakerfp.evaluation import classify_samples, featurize, score, sweep_k
from speakerfp.features import read_activations
from speakerfp.fingerprint import build_library

SPEAKER_TOKEN_RE = re.compile(r"\[(?!CLS\]|SEP\])[A-Z0-9_]+\]\s*")


def strip_tokens(path: Path, out: Path) -> Path:
    with open(path, encoding="utf-8") as src, open(out, "w", encoding="utf-8") as dst:
        for line in src:
            row = json.loads(line)
            row["text"] = SPEAKER_TOKEN_RE.sub("", row["text"])
            dst.write(json.dumps(row, ensure_ascii=False) + "\n")
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--train", required=True)
    parser.add_argument("--valid")
    parser.add_argument("--test", required=True)
    parser.add_argument("--encoder", default="roberta-base")
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--learning-rate", type=float, default=2e-5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-length", type=int, default=256)
    parser.add_argument("--ks", default="16,32,64,128,150,256,409,512,768")
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hp = Hyperparameters(
        encoder=args.encoder,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        max_length=args.max_length,
    )
    train = read_samples(args.train)
    valid = read_samples(args.valid) if args.valid else None
    test = read_samples(args.test)

    print("== fine-tune with speaker tokens ==")
    finetune(train, hp, out / "ckpt", valid)
    model, tokenizer, _ = load_checkpoint(out / "ckpt")
    finetuned_accuracy = evaluate_accuracy(model, tokenizer, test, hp)
    print(f"fine-tuned test accuracy: {finetuned_accuracy:.2f}")

    print("== fine-tune without speaker tokens (ablation) ==")
    bare_train = strip_tokens(Path(args.train), out / "train-no-tokens.jsonl")
    bare_test_path = strip_tokens(Path(args.test), out / "test-no-tokens.jsonl")
    finetune(read_samples(bare_train), hp, out / "ckpt-no-tokens", valid=None)
    bare_model, bare_tokenizer, _ = load_checkpoint(out / "ckpt-no-tokens")
    ablated_accuracy = evaluate_accuracy(bare_model, bare_tokenizer, read_samples(bare_test_path), hp)
    print(f"ablated test accuracy: {ablated_accuracy:.2f}")

    print("== export activations and classify with fuzzy fingerprints ==")
    merged = out / "train-plus-test.jsonl"
    with open(merged, "w", encoding="utf-8") as dst:
        for path in (args.train, args.test):
            dst.write(open(path, encoding="utf-8").read())
    export_activations(out / "ckpt", merged, out / "activations.ffpa", batch_size=args.batch_size)
    activations = read_activations(out / "activations.ffpa")
    train_samples = read_consumer_samples(args.train)
    test_samples = read_consumer_samples(args.test)
    train_vectors = featurize(train_samples, "activations", activations=activations)
    test_vectors = featurize(test_samples, "activations", activations=activations)
    train_labels = {s.sample_id: s.label for s in train_samples}
    golds = {s.sample_id: s.label for s in test_samples}

    library = build_library(train_vectors, train_labels, 409)
    results, featureless = classify_samples(test_vectors, golds, library)
    ffp_accuracy = score(results, n_featureless=len(featureless)).accuracy
    print(f"fingerprints at k=409: {ffp_accuracy:.2f}")

    ks = [int(k) for k in args.ks.split(",")]
    points = sweep_k(train_vectors, train_labels, test_vectors, golds, ks)
    sweep = {p.value: p.report.accuracy for p in points}
    for k, accuracy in sweep.items():
        print(f"  k={k}: {accuracy:.2f}")

    results_path = out / "results.json"
    results_path.write_text(
        json.dumps(
            {
                "finetuned_accuracy": finetuned_accuracy,
                "finetuned_accuracy_no_tokens": ablated_accuracy,
                "ffp_k409_accuracy": ffp_accuracy,
                "k_sweep_accuracy": sweep,
                "hyperparameters": vars(args),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote {results_path}")


if __name__ == "__main__":
    main()
