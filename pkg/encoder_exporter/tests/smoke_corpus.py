import json
import random

SPEAKERS = ["Speaker A", "Speaker B", "Speaker C"]
TOKENS = {"Speaker A": "[SPEAKER_A]", "Speaker B": "[SPEAKER_B]", "Speaker C": "[SPEAKER_C]"}
PRIVATE = {
    "Speaker A": ["alpha0", "alpha1", "alpha2", "alpha3"],
    "Speaker B": ["beta0", "beta1", "beta2", "beta3"],
    "Speaker C": ["gamma0", "gamma1", "gamma2", "gamma3"],
}
FILLER = ["um", "well", "so", "right", "okay"]


def make_sample_rows(n, seed, context=1):
    """Assembled-sample JSONL rows in the classifier's wire format."""
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        speaker = SPEAKERS[i % 3]
        previous = SPEAKERS[(i + 1) % 3]
        words = rng.choices(PRIVATE[speaker], k=3) + rng.choices(FILLER, k=2)
        rng.shuffle(words)
        target = " ".join(words)
        if context:
            ctx_words = " ".join(rng.choices(PRIVATE[previous], k=2) + rng.choices(FILLER, k=1))
            text = f"[CLS] {TOKENS[previous]} {ctx_words} [SEP] {target} [SEP]"
        else:
            text = f"[CLS] {target} [SEP]"
        rows.append(
            {
                "id": f"syn{seed:02d}:{i:03d}",
                "label": speaker,
                "text": text,
                "context_used": 1 if context else 0,
                "target_len": len(target.split()),
            }
        )
    return rows


def write_rows(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path
