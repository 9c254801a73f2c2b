"""Synthetic dialogue corpora with known structure, for benchmarks and tests.

Two constructions: one where each speaker owns an exclusive high-frequency
vocabulary (near-separable from the target utterance alone), and one where
utterances are interchangeable but turn-taking is deterministic, so only
conversational context identifies the speaker.
"""

from __future__ import annotations

import random

from .corpus import Corpus, LabelMap, Scene, Turn


def exclusive_vocabulary_corpus(
    n_speakers: int = 3,
    exclusive_terms: int = 20,
    n_scenes: int = 60,
    turns_per_scene: int = 10,
    filler_terms: int = 60,
    seed: int = 7,
) -> tuple[Corpus, LabelMap]:
    """Each speaker draws most words from a private vocabulary plus shared filler.

    Exclusive terms dominate every utterance, so the construction stays nearly
    separable from the target utterance alone.
    """
    rng = random.Random(seed)
    speakers = [f"Speaker {chr(ord('A') + i)}" for i in range(n_speakers)]
    private = {
        s: [f"spk{i}_w{j:02d}" for j in range(exclusive_terms)] for i, s in enumerate(speakers)
    }
    filler = [f"filler_w{j:02d}" for j in range(filler_terms)]
    scenes = []
    for s in range(n_scenes):
        turns = []
        for t in range(turns_per_scene):
            speaker = rng.choice(speakers)
            words = rng.choices(private[speaker], k=rng.randint(5, 9))
            words += rng.choices(filler, k=rng.randint(1, 2))
            rng.shuffle(words)
            turns.append(Turn(speaker=speaker, text=" ".join(words), index=t))
        scenes.append(Scene(scene_id=f"synv{s:04d}", episode=f"e{s // 10:02d}", turns=tuple(turns)))
    return Corpus(scenes=tuple(scenes)), LabelMap(main_speakers=tuple(speakers))


def turn_taking_corpus(
    n_speakers: int = 3,
    n_scenes: int = 60,
    turns_per_scene: int = 12,
    filler_terms: int = 100,
    words_per_turn: int = 8,
    seed: int = 11,
) -> tuple[Corpus, LabelMap]:
    """Speakers cycle deterministically; the words themselves carry no identity.

    The previous turn's speaker token is the only reliable signal, so accuracy
    should jump once one turn of context is assembled.
    """
    rng = random.Random(seed)
    speakers = [f"Speaker {chr(ord('A') + i)}" for i in range(n_speakers)]
    filler = [f"filler_w{j:03d}" for j in range(filler_terms)]
    scenes = []
    for s in range(n_scenes):
        turns = []
        for t in range(turns_per_scene):
            speaker = speakers[(s + t) % n_speakers]  # rotate scene openers too
            words = rng.choices(filler, k=words_per_turn)
            turns.append(Turn(speaker=speaker, text=" ".join(words), index=t))
        scenes.append(Scene(scene_id=f"synt{s:04d}", episode=f"e{s // 10:02d}", turns=tuple(turns)))
    return Corpus(scenes=tuple(scenes)), LabelMap(main_speakers=tuple(speakers))
