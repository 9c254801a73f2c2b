"""Tokenizer handling: speaker-token extension and an offline word-level build.

Speaker tokens are appended as additional special tokens so each one maps to
exactly one vocabulary id and survives encode/decode untouched.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import PreTrainedTokenizerFast

from .errors import ExporterError


def extend_tokenizer(tokenizer, speaker_tokens: Sequence[str]):
    """Add speaker tokens as special tokens; returns the count of new ids.

    Submitting a token twice, or one the tokenizer already knows, is an error:
    silently reusing an id would desynchronize the embedding resize.
    """
    duplicates = [t for t in speaker_tokens if speaker_tokens.count(t) > 1]
    if duplicates:
        raise ExporterError(f"duplicate speaker token(s): {sorted(set(duplicates))}")
    vocab = tokenizer.get_vocab()
    already = [t for t in speaker_tokens if t in vocab]
    if already:
        raise ExporterError(f"token(s) already present in the tokenizer: {already}")
    payload = {"additional_special_tokens": list(speaker_tokens)}
    try:
        added = tokenizer.add_special_tokens(payload, replace_extra_special_tokens=False)
    except TypeError:  # the keyword was renamed across transformers majors
        added = tokenizer.add_special_tokens(payload, replace_additional_special_tokens=False)
    if added != len(speaker_tokens):
        raise ExporterError(
            f"expected {len(speaker_tokens)} new ids, tokenizer reports {added}"
        )
    for token in speaker_tokens:
        ids = tokenizer.encode(token, add_special_tokens=False)
        if len(ids) != 1:
            raise ExporterError(f"{token} does not map to a single id: {ids}")
    return added


def build_wordlevel_tokenizer(texts: Iterable[str], max_length: int = 128) -> PreTrainedTokenizerFast:
    """Whitespace word-level tokenizer built from the corpus itself.

    Used by the from-scratch encoder so everything runs without downloading a
    pretrained vocabulary. The vocabulary is assembled by hand rather than via
    the trainer: the marker tokens appear inside the texts, and the trainer
    would re-assign them fresh ids, leaving holes that desynchronize
    len(tokenizer) from the real id range.
    """
    vocab: dict[str, int] = {}
    for token in ("[PAD]", "[UNK]", "[CLS]", "[SEP]"):
        vocab[token] = len(vocab)
    for text in texts:
        for token in text.split():
            if token not in vocab:
                vocab[token] = len(vocab)
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tokenizer.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        pad_token="[PAD]",
        unk_token="[UNK]",
        cls_token="[CLS]",
        sep_token="[SEP]",
    )
    fast.model_max_length = max_length
    return fast


def encode_batch(tokenizer, texts: Sequence[str], max_length: int | None = None):
    """Tokenize assembled inputs, swapping the literal markers for native ones.

    The sample format writes "[CLS]"/"[SEP]" literally; a pretrained tokenizer
    may use different surface forms (e.g. <s>, </s>), so the markers are
    replaced at encode time and no automatic specials are added on top.
    """
    swapped = [
        t.replace("[CLS]", tokenizer.cls_token).replace("[SEP]", tokenizer.sep_token)
        for t in texts
    ]
    return tokenizer(
        swapped,
        add_special_tokens=False,
        padding=True,
        truncation=True,
        max_length=max_length or tokenizer.model_max_length,
        return_tensors="pt",
    )
