"""Fine-tune an encoder for speaker classification over assembled samples.

The checkpoint directory holds the model, the tokenizer, and a training
manifest (labels, speaker tokens, context size, hyperparameters, per-epoch
log) that the exporter validates against before producing activations.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
import transformers.utils.logging
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    RobertaConfig,
    RobertaForSequenceClassification,
)

transformers.utils.logging.disable_progress_bar()

from .errors import ExporterError
from .samples import Sample, speaker_tokens_in
from .tokenizer_ext import build_wordlevel_tokenizer, encode_batch, extend_tokenizer

TRAINING_MANIFEST = "training_manifest.json"


@dataclass(frozen=True)
class Hyperparameters:
    encoder: str = "from-scratch"  # or a pretrained model name
    epochs: int = 3
    batch_size: int = 16
    learning_rate: float = 1e-3  # pretrained encoders want ~2e-5
    seed: int = 0
    max_length: int = 128
    # from-scratch architecture knobs; ignored for pretrained encoders
    hidden_size: int = 64
    num_layers: int = 2
    num_heads: int = 2


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    valid_accuracy: float | None = None


def _prepare(samples: list[Sample], hp: Hyperparameters):
    labels = sorted({s.label for s in samples})
    if len(labels) < 2:
        raise ExporterError("training needs at least two classes")
    tokens = speaker_tokens_in(samples)
    if hp.encoder == "from-scratch":
        tokenizer = build_wordlevel_tokenizer((s.text for s in samples), hp.max_length)
        extend_tokenizer(tokenizer, [t for t in tokens if t not in tokenizer.get_vocab()])
        config = RobertaConfig(
            vocab_size=len(tokenizer),
            hidden_size=hp.hidden_size,
            num_hidden_layers=hp.num_layers,
            num_attention_heads=hp.num_heads,
            intermediate_size=4 * hp.hidden_size,
            max_position_embeddings=hp.max_length + 8,
            pad_token_id=tokenizer.pad_token_id,
            num_labels=len(labels),
        )
        model = RobertaForSequenceClassification(config)
    else:
        tokenizer = AutoTokenizer.from_pretrained(hp.encoder)
        extend_tokenizer(tokenizer, tokens)
        model = AutoModelForSequenceClassification.from_pretrained(
            hp.encoder, num_labels=len(labels)
        )
        model.resize_token_embeddings(len(tokenizer))
    model.config.label2id = {label: i for i, label in enumerate(labels)}
    model.config.id2label = {i: label for i, label in enumerate(labels)}
    return tokenizer, model, labels, tokens


def _batches(n: int, batch_size: int, generator: torch.Generator):
    order = torch.randperm(n, generator=generator).tolist()
    for start in range(0, n, batch_size):
        yield order[start: start + batch_size]


@torch.no_grad()
def evaluate_accuracy(model, tokenizer, samples: list[Sample], hp: Hyperparameters) -> float:
    model.eval()
    label2id = model.config.label2id
    correct = 0
    for start in range(0, len(samples), hp.batch_size):
        chunk = samples[start: start + hp.batch_size]
        batch = encode_batch(tokenizer, [s.text for s in chunk], hp.max_length)
        predictions = model(**batch).logits.argmax(dim=-1)
        correct += sum(
            int(p) == label2id[s.label] for p, s in zip(predictions, chunk)
        )
    return 100.0 * correct / len(samples)


def finetune(
    train_samples: list[Sample],
    hp: Hyperparameters,
    checkpoint_dir: str | Path,
    valid_samples: list[Sample] | None = None,
) -> list[EpochLog]:
    """Train on the training split only; returns the per-epoch log."""
    torch.manual_seed(hp.seed)
    tokenizer, model, labels, tokens = _prepare(train_samples, hp)
    optimizer = torch.optim.AdamW(model.parameters(), lr=hp.learning_rate)
    generator = torch.Generator().manual_seed(hp.seed)
    label2id = model.config.label2id
    logs: list[EpochLog] = []
    for epoch in range(hp.epochs):
        model.train()
        losses = []
        for indices in _batches(len(train_samples), hp.batch_size, generator):
            chunk = [train_samples[i] for i in indices]
            batch = encode_batch(tokenizer, [s.text for s in chunk], hp.max_length)
            targets = torch.tensor([label2id[s.label] for s in chunk])
            loss = model(**batch, labels=targets).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(loss.detach().item())
        log = EpochLog(epoch=epoch, train_loss=sum(losses) / len(losses))
        if valid_samples:
            log.valid_accuracy = evaluate_accuracy(model, tokenizer, valid_samples, hp)
        logs.append(log)
        shown = f"{log.valid_accuracy:.2f}" if log.valid_accuracy is not None else "n/a"
        print(f"epoch {epoch}: train loss {log.train_loss:.4f}, valid accuracy {shown}")

    out = Path(checkpoint_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    manifest = {
        "encoder": hp.encoder,
        "labels": labels,
        "speaker_tokens": tokens,
        "context_size": max(s.context_used for s in train_samples),
        "hidden_size": int(model.config.hidden_size),
        "hyperparameters": asdict(hp),
        "epoch_log": [asdict(log) for log in logs],
    }
    (out / TRAINING_MANIFEST).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return logs


def load_checkpoint(checkpoint_dir: str | Path):
    out = Path(checkpoint_dir)
    manifest_path = out / TRAINING_MANIFEST
    if not manifest_path.exists():
        raise ExporterError(f"{out} has no {TRAINING_MANIFEST}; not an exporter checkpoint")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    tokenizer = AutoTokenizer.from_pretrained(out)
    model = AutoModelForSequenceClassification.from_pretrained(out)
    model.eval()
    return model, tokenizer, manifest
