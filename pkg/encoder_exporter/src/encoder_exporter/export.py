"""Export pooled hidden states into the binary FFPA activation format.

Layout: magic `FFPA`, version u8 = 1, dimension u32 LE, record count u64 LE,
then per record id-length u16 LE, UTF-8 id bytes, dimension x float32 LE.
The pooled representation is the final-layer hidden state at the first
(cls-marker) position, stored untouched: the consumer applies the absolute
value on load, so files legitimately contain negatives. A JSON manifest is
written beside every activation file.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import ExporterError
from .samples import Sample, file_sha256, speaker_tokens_in
from .tokenizer_ext import encode_batch

MAGIC = b"FFPA"
VERSION = 1
POOLING = "cls_final_hidden_state"


def write_ffpa(path: str | Path, records: list[tuple[str, np.ndarray]], dim: int) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(records)))
        for sample_id, vec in records:
            if vec.shape != (dim,):
                raise ExporterError(f"record {sample_id!r}: dimension mismatch {vec.shape}")
            encoded = sample_id.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(vec.astype("<f4").tobytes())


def _validate_compatibility(samples: list[Sample], tokenizer, manifest: dict) -> None:
    context = max(s.context_used for s in samples)
    if context > manifest["context_size"]:
        raise ExporterError(
            f"samples use context {context} but the checkpoint was trained at "
            f"{manifest['context_size']}"
        )
    vocab = tokenizer.get_vocab()
    unknown = [t for t in speaker_tokens_in(samples) if t not in vocab]
    if unknown:
        raise ExporterError(f"speaker token(s) unknown to the checkpoint: {unknown}")


@torch.no_grad()
def export_activations(
    checkpoint_dir: str | Path,
    samples_path: str | Path,
    out_path: str | Path,
    batch_size: int = 32,
    predictions_path: str | Path | None = None,
) -> dict:
    """One float32 record per sample, ids unchanged; returns the manifest dict.

    Optionally also writes the classification head's softmax predictions as
    JSONL, for comparing the full fine-tuned head against the fingerprint
    classifier downstream.
    """
    from .finetune import load_checkpoint
    from .samples import read_samples

    model, tokenizer, training = load_checkpoint(checkpoint_dir)
    samples = read_samples(samples_path)
    _validate_compatibility(samples, tokenizer, training)
    max_length = training["hyperparameters"]["max_length"]
    cls_id = tokenizer.cls_token_id

    records: list[tuple[str, np.ndarray]] = []
    predictions = []
    dim = int(model.config.hidden_size)
    for start in range(0, len(samples), batch_size):
        chunk = samples[start: start + batch_size]
        batch = encode_batch(tokenizer, [s.text for s in chunk], max_length)
        if not bool((batch["input_ids"][:, 0] == cls_id).all()):
            raise ExporterError("an input does not begin with the cls marker")
        output = model(**batch, output_hidden_states=True)
        pooled = output.hidden_states[-1][:, 0, :].to(torch.float32).numpy()
        for i, sample in enumerate(chunk):
            records.append((sample.sample_id, pooled[i]))
        if predictions_path is not None:
            probabilities = torch.softmax(output.logits, dim=-1)
            for i, sample in enumerate(chunk):
                predictions.append(
                    {
                        "id": sample.sample_id,
                        "gold": sample.label,
                        "pred": model.config.id2label[int(probabilities[i].argmax())],
                        "probs": {
                            model.config.id2label[j]: float(p)
                            for j, p in enumerate(probabilities[i])
                        },
                    }
                )

    write_ffpa(out_path, records, dim)
    manifest = {
        "encoder": training["encoder"],
        "pooling": POOLING,
        "dim": dim,
        "context_size": training["context_size"],
        "samples_sha256": file_sha256(samples_path),
        "n_records": len(records),
        "hyperparameters": training["hyperparameters"],
    }
    manifest_path = Path(str(out_path) + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if predictions_path is not None:
        with open(predictions_path, "w", encoding="utf-8", newline="\n") as fh:
            for row in predictions:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return manifest
