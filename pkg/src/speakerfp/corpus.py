"""Transcript corpora: parsing, labeling, context assembly, splits, statistics.

The internal contract is a canonical JSONL file with one scene per line:

    {"scene_id": "s01e01_c03", "season": 1, "episode": "s01e01",
     "turns": [{"speaker": "Monica Geller", "text": "..."}, ...]}

Upstream release formats (per-season JSON for Friends, episode-transcript CSV
for Big Bang Theory) are handled only by adapters that emit this contract.
"""

from __future__ import annotations

import csv
import json
import random
import re
import warnings
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    AdapterError,
    ConfigError,
    CorpusParseError,
    CorpusValidationError,
)

FRIENDS_MAIN_SPEAKERS = (
    "Chandler Bing",
    "Joey Tribbiani",
    "Monica Geller",
    "Phoebe Buffay",
    "Rachel Green",
    "Ross Geller",
)

BBT_MAIN_SPEAKERS = (
    "Amy",
    "Bernadette",
    "Howard",
    "Leonard",
    "Penny",
    "Raj",
    "Sheldon",
)

LABEL_PRESETS = {"friends": FRIENDS_MAIN_SPEAKERS, "bbt": BBT_MAIN_SPEAKERS}

OTHER_LABEL = "Other"

CLS = "[CLS]"
SEP = "[SEP]"

_TOKEN_RE = re.compile(r"\[[A-Z0-9_]+\]")


@dataclass(frozen=True)
class Turn:
    """One utterance with its speaker annotation.

    index is the 0-based position within the scene; label is filled in by
    apply_labels and stays None until then.
    """

    speaker: str
    text: str
    index: int
    label: str | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusValidationError(f"turn {self.index}: empty text")
        if not self.speaker.strip():
            raise CorpusValidationError(f"turn {self.index}: empty speaker name")

    @property
    def n_words(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class Scene:
    scene_id: str
    episode: str
    turns: tuple[Turn, ...]
    season: int | None = None

    def __post_init__(self):
        for position, turn in enumerate(self.turns):
            if turn.index != position:
                raise CorpusValidationError(
                    f"scene {self.scene_id!r}: turn index {turn.index} at position {position}"
                )
        if self.season is not None and self.season < 1:
            raise CorpusValidationError(f"scene {self.scene_id!r}: season must be >= 1")


@dataclass(frozen=True)
class Corpus:
    scenes: tuple[Scene, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for scene in self.scenes:
            if scene.scene_id in seen:
                raise CorpusValidationError(f"duplicate scene_id {scene.scene_id!r}")
            seen.add(scene.scene_id)

    @property
    def n_scenes(self) -> int:
        return len(self.scenes)

    @property
    def n_turns(self) -> int:
        return sum(len(s.turns) for s in self.scenes)

    def iter_turns(self) -> Iterator[tuple[Scene, Turn]]:
        for scene in self.scenes:
            for turn in scene.turns:
                yield scene, turn


@dataclass(frozen=True)
class LabelMap:
    """Main speakers keep their own label; everyone else folds into Other."""

    main_speakers: tuple[str, ...]
    other_label: str = OTHER_LABEL

    def __post_init__(self):
        if not self.main_speakers:
            raise CorpusValidationError("label map needs at least one main speaker")
        if len(set(self.main_speakers)) != len(self.main_speakers):
            raise CorpusValidationError("duplicate names in main speakers")
        if self.other_label in self.main_speakers:
            raise CorpusValidationError("other label collides with a main speaker")

    @classmethod
    def preset(cls, name: str) -> "LabelMap":
        try:
            return cls(main_speakers=tuple(LABEL_PRESETS[name]))
        except KeyError:
            raise ConfigError(
                f"unknown label preset {name!r}; available: {sorted(LABEL_PRESETS)}"
            ) from None

    def label_for(self, speaker: str) -> str:
        return speaker if speaker in self.main_speakers else self.other_label

    @property
    def labels(self) -> tuple[str, ...]:
        return self.main_speakers + (self.other_label,)


@dataclass(frozen=True)
class AssembledSample:
    """A context-windowed input string ready for feature extraction."""

    sample_id: str
    input_text: str
    label: str
    context_used: int
    target_length_words: int


@dataclass(frozen=True)
class SplitSpec:
    """How to carve a corpus into train/valid/test at scene granularity."""

    mode: str
    valid_seasons: frozenset[int] = frozenset()
    test_seasons: frozenset[int] = frozenset()
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("by_season", "random"):
            raise ConfigError(f"unknown split mode {self.mode!r}")
        if self.mode == "by_season":
            if not self.valid_seasons or not self.test_seasons:
                raise ConfigError("by_season split needs valid and test seasons")
            if self.valid_seasons & self.test_seasons:
                raise ConfigError("valid and test seasons overlap")
        else:
            if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
                raise ConfigError("ratios must be three non-negative numbers")
            if abs(sum(self.ratios) - 1.0) > 1e-9:
                raise ConfigError("ratios must sum to 1")

    @classmethod
    def by_season(cls, valid: Iterable[int], test: Iterable[int]) -> "SplitSpec":
        return cls(mode="by_season", valid_seasons=frozenset(valid), test_seasons=frozenset(test))

    @classmethod
    def random_split(cls, ratios: tuple[float, float, float], seed: int) -> "SplitSpec":
        return cls(mode="random", ratios=tuple(ratios), seed=seed)


@dataclass(frozen=True)
class Splits:
    train: Corpus
    valid: Corpus
    test: Corpus


@dataclass(frozen=True)
class StatsReport:
    n_scenes: int
    n_turns: int
    mean_sentence_length: float
    std_sentence_length: float
    mean_scene_length: float
    std_scene_length: float
    speaker_frequencies: dict[str, float]  # percent of turns

    def to_dict(self) -> dict:
        return {
            "n_scenes": self.n_scenes,
            "n_turns": self.n_turns,
            "mean_sentence_length": round(self.mean_sentence_length, 2),
            "std_sentence_length": round(self.std_sentence_length, 2),
            "mean_scene_length": round(self.mean_scene_length, 2),
            "std_scene_length": round(self.std_scene_length, 2),
            "speaker_frequencies": {
                name: round(pct, 2) for name, pct in sorted(self.speaker_frequencies.items())
            },
        }


# ---------------------------------------------------------------------------
# Canonical JSONL
# ---------------------------------------------------------------------------


def _scene_from_record(record: dict, line_no: int) -> Scene:
    if not isinstance(record, dict):
        raise CorpusParseError(f"line {line_no}: scene record must be an object", line_no)
    try:
        scene_id = record["scene_id"]
        episode = record["episode"]
        raw_turns = record["turns"]
    except KeyError as exc:
        raise CorpusParseError(f"line {line_no}: missing field {exc.args[0]!r}", line_no) from None
    season = record.get("season")
    if season is not None and not isinstance(season, int):
        raise CorpusParseError(f"line {line_no}: season must be an integer", line_no)
    if not isinstance(raw_turns, list):
        raise CorpusParseError(f"line {line_no}: turns must be a list", line_no)
    turns = []
    for i, raw in enumerate(raw_turns):
        try:
            speaker, text = raw["speaker"], raw["text"]
        except (TypeError, KeyError):
            raise CorpusParseError(f"line {line_no}: turn {i} missing speaker/text", line_no) from None
        try:
            turns.append(Turn(speaker=speaker, text=text, index=i))
        except CorpusValidationError as exc:
            raise CorpusValidationError(f"line {line_no}: scene {scene_id!r}: {exc}") from None
    try:
        return Scene(scene_id=scene_id, episode=episode, turns=tuple(turns), season=season)
    except CorpusValidationError as exc:
        raise CorpusValidationError(f"line {line_no}: {exc}") from None


def parse_canonical(path: str | Path) -> Corpus:
    """Parse a canonical corpus JSONL file, preserving scene and turn order."""
    scenes: list[Scene] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"line {line_no}: invalid JSON: {exc.msg}", line_no) from None
            scene = _scene_from_record(record, line_no)
            if scene.scene_id in seen:
                raise CorpusValidationError(
                    f"line {line_no}: duplicate scene_id {scene.scene_id!r}"
                )
            seen.add(scene.scene_id)
            scenes.append(scene)
    if not scenes:
        warnings.warn(f"no scenes found in {path}", stacklevel=2)
    return Corpus(scenes=tuple(scenes))


def canonical_line(scene: Scene) -> str:
    record: dict = {"scene_id": scene.scene_id}
    if scene.season is not None:
        record["season"] = scene.season
    record["episode"] = scene.episode
    record["turns"] = [{"speaker": t.speaker, "text": t.text} for t in scene.turns]
    return json.dumps(record, ensure_ascii=False)


def write_canonical(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for scene in corpus.scenes:
            fh.write(canonical_line(scene) + "\n")


# ---------------------------------------------------------------------------
# Upstream adapters
# ---------------------------------------------------------------------------


def normalize_speaker(name: str) -> str:
    """Trim and collapse internal whitespace; the only normalization adapters do."""
    return " ".join(name.split())


def _season_number(season_id) -> int | None:
    if isinstance(season_id, int):
        return season_id
    if isinstance(season_id, str):
        m = re.search(r"(\d+)", season_id)
        if m:
            return int(m.group(1))
    return None


def _friends_scenes(path: Path) -> list[Scene]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AdapterError(f"{path.name}: not valid JSON: {exc.msg}") from None
    if "episodes" not in data:
        raise AdapterError(f"{path.name}: missing field 'episodes'")
    season = _season_number(data.get("season_id"))
    scenes: list[Scene] = []
    for episode in data["episodes"]:
        if "episode_id" not in episode:
            raise AdapterError(f"{path.name}: episode missing field 'episode_id'")
        episode_id = episode["episode_id"]
        if "scenes" not in episode:
            raise AdapterError(f"{path.name}: episode {episode_id!r} missing field 'scenes'")
        for raw_scene in episode["scenes"]:
            if "scene_id" not in raw_scene:
                raise AdapterError(f"{path.name}: scene missing field 'scene_id'")
            scene_id = raw_scene["scene_id"]
            if "utterances" not in raw_scene:
                raise AdapterError(f"{path.name}: scene {scene_id!r} missing field 'utterances'")
            turns: list[Turn] = []
            for utt in raw_scene["utterances"]:
                if "transcript" not in utt:
                    raise AdapterError(f"{path.name}: utterance missing field 'transcript'")
                text = utt["transcript"].strip()
                speakers = utt.get("speakers") or []
                if not text or not speakers:
                    continue  # scene notes and unattributed lines carry no speaker signal
                speaker = normalize_speaker(speakers[0])
                if not speaker:
                    continue
                turns.append(Turn(speaker=speaker, text=text, index=len(turns)))
            if turns:
                scenes.append(
                    Scene(scene_id=scene_id, episode=episode_id, turns=tuple(turns), season=season)
                )
    return scenes


def adapt_friends(path: str | Path) -> Corpus:
    """Convert the per-season JSON release of the Friends transcripts.

    path may be one season file or a directory of them; directories are read
    in sorted filename order.
    """
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    if not files:
        raise AdapterError(f"no .json season files under {p}")
    scenes: list[Scene] = []
    for f in files:
        scenes.extend(_friends_scenes(f))
    return Corpus(scenes=tuple(scenes))


_BBT_EPISODE_RE = re.compile(r"series\s*(\d+)\s*episode\s*(\d+)", re.IGNORECASE)


def _bbt_episode_key(episode_name: str) -> tuple[str, int | None]:
    m = _BBT_EPISODE_RE.search(episode_name)
    if m:
        season, episode = int(m.group(1)), int(m.group(2))
        return f"s{season:02d}e{episode:02d}", season
    slug = re.sub(r"[^a-z0-9]+", "_", episode_name.lower()).strip("_") or "unknown"
    return slug, None


def adapt_bbt(path: str | Path) -> Corpus:
    """Convert the episode-transcript CSV release of the Big Bang Theory corpus.

    Rows whose speaker column reads "Scene" are scene boundaries; dialogue
    rows belong to the most recent boundary of their episode.
    """
    scenes: list[Scene] = []
    state: dict = {"turns": [], "scene_no": 0, "slug": None, "season": None}

    def flush():
        if state["turns"]:
            scenes.append(
                Scene(
                    scene_id=f"{state['slug']}_c{state['scene_no']:02d}",
                    episode=state["slug"],
                    turns=tuple(state["turns"]),
                    season=state["season"],
                )
            )
        state["turns"] = []

    scene_counters: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        fieldnames = set(reader.fieldnames or [])
        for column in ("person_scene", "dialogue", "episode_name"):
            if column not in fieldnames:
                raise AdapterError(f"{Path(path).name}: missing column '{column}'")
        for row in reader:
            slug, season = _bbt_episode_key((row["episode_name"] or "").strip())
            if slug != state["slug"]:
                flush()
                state.update(slug=slug, season=season, scene_no=scene_counters.get(slug, 0))
            person = normalize_speaker(row["person_scene"] or "")
            text = (row["dialogue"] or "").strip()
            if person.lower() == "scene":
                flush()
                state["scene_no"] += 1
                scene_counters[slug] = state["scene_no"]
                continue
            if not person or not text:
                continue
            if state["scene_no"] == 0:  # dialogue before any boundary marker
                state["scene_no"] = 1
                scene_counters[slug] = 1
            state["turns"].append(Turn(speaker=person, text=text, index=len(state["turns"])))
    flush()
    return Corpus(scenes=tuple(scenes))


# ---------------------------------------------------------------------------
# Labels and speaker tokens
# ---------------------------------------------------------------------------


def apply_labels(corpus: Corpus, label_map: LabelMap) -> Corpus:
    """Attach a class label to every turn; unknown speakers map to Other."""
    scenes = tuple(
        replace(
            scene,
            turns=tuple(replace(t, label=label_map.label_for(t.speaker)) for t in scene.turns),
        )
        for scene in corpus.scenes
    )
    return Corpus(scenes=scenes)


def make_speaker_token(name: str) -> str:
    """Render a speaker or label name as a bracketed uppercase token.

    "Monica Geller" -> "[MONICA_GELLER]"; any run of non-alphanumeric
    characters becomes a single underscore.
    """
    cleaned = re.sub(r"[^A-Z0-9]+", "_", name.upper()).strip("_")
    if not cleaned:
        raise CorpusValidationError(f"cannot build a speaker token from {name!r}")
    token = f"[{cleaned}]"
    assert _TOKEN_RE.fullmatch(token)
    return token


def speaker_token_map(label_map: LabelMap) -> dict[str, str]:
    """Token per label; raises if two labels collide onto the same token."""
    tokens = {label: make_speaker_token(label) for label in label_map.labels}
    if len(set(tokens.values())) != len(tokens):
        collisions = Counter(tokens.values())
        dupes = sorted(t for t, n in collisions.items() if n > 1)
        raise CorpusValidationError(f"speaker tokens collide: {dupes}")
    return tokens


# ---------------------------------------------------------------------------
# Context assembly
# ---------------------------------------------------------------------------


def assemble_samples(
    corpus: Corpus,
    max_previous_context: int,
    include_speaker_tokens: bool = True,
) -> list[AssembledSample]:
    """Serialize every turn with up to max_previous_context preceding turns.

    Context never crosses scene boundaries. Context turns are rendered as
    "<speaker_token> <text> [SEP]" (token omitted when include_speaker_tokens
    is off); the target turn is rendered bare so its own speaker token never
    leaks into the input. Output is ordered by scene_id, then turn index.
    """
    if max_previous_context < 0:
        raise ConfigError("max_previous_context must be >= 0")
    tokens: dict[str, str] = {}

    def token_for(label: str) -> str:
        if label not in tokens:
            token = make_speaker_token(label)
            if token in tokens.values():
                raise CorpusValidationError(f"speaker token collision on {token}")
            tokens[label] = token
        return tokens[label]

    samples: list[AssembledSample] = []
    for scene in sorted(corpus.scenes, key=lambda s: s.scene_id):
        for i, turn in enumerate(scene.turns):
            if turn.label is None:
                raise CorpusValidationError(
                    f"scene {scene.scene_id!r}: turn {i} has no label; apply_labels first"
                )
            context = scene.turns[max(0, i - max_previous_context): i]
            parts = [CLS]
            for prev in context:
                if include_speaker_tokens:
                    parts.append(token_for(prev.label))  # type: ignore[arg-type]
                parts.extend((prev.text, SEP))
            parts.extend((turn.text, SEP))
            samples.append(
                AssembledSample(
                    sample_id=f"{scene.scene_id}:{turn.index}",
                    input_text=" ".join(parts),
                    label=turn.label,
                    context_used=len(context),
                    target_length_words=turn.n_words,
                )
            )
    return samples


def write_samples(samples: Sequence[AssembledSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {
                        "id": s.sample_id,
                        "label": s.label,
                        "text": s.input_text,
                        "context_used": s.context_used,
                        "target_len": s.target_length_words,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_samples(path: str | Path) -> list[AssembledSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                samples.append(
                    AssembledSample(
                        sample_id=row["id"],
                        input_text=row["text"],
                        label=row["label"],
                        context_used=row["context_used"],
                        target_length_words=row["target_len"],
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorpusParseError(f"line {line_no}: bad sample record: {exc}", line_no) from None
    return samples


# ---------------------------------------------------------------------------
# Splits and statistics
# ---------------------------------------------------------------------------


def filter_seasons(corpus: Corpus, seasons: Iterable[int]) -> Corpus:
    wanted = set(seasons)
    return Corpus(scenes=tuple(s for s in corpus.scenes if s.season in wanted))


def split(corpus: Corpus, spec: SplitSpec) -> Splits:
    """Partition scenes into train/valid/test; disjoint and exhaustive."""
    if spec.mode == "by_season":
        train, valid, test = [], [], []
        for scene in corpus.scenes:
            if scene.season is None:
                raise CorpusValidationError(
                    f"scene {scene.scene_id!r} has no season; by_season split impossible"
                )
            if scene.season in spec.valid_seasons:
                valid.append(scene)
            elif scene.season in spec.test_seasons:
                test.append(scene)
            else:
                train.append(scene)
    else:
        ids = sorted(s.scene_id for s in corpus.scenes)
        rng = random.Random(spec.seed)
        rng.shuffle(ids)
        n = len(ids)
        n_valid = round(spec.ratios[1] * n)
        n_test = round(spec.ratios[2] * n)
        n_train = n - n_valid - n_test
        if n_train < 0:
            raise ConfigError("ratios leave no room for a training split")
        train_ids = set(ids[:n_train])
        valid_ids = set(ids[n_train: n_train + n_valid])
        train, valid, test = [], [], []
        for scene in corpus.scenes:  # keep corpus order inside each split
            if scene.scene_id in train_ids:
                train.append(scene)
            elif scene.scene_id in valid_ids:
                valid.append(scene)
            else:
                test.append(scene)
    return Splits(
        train=Corpus(scenes=tuple(train)),
        valid=Corpus(scenes=tuple(valid)),
        test=Corpus(scenes=tuple(test)),
    )


def corpus_stats(corpus: Corpus, label_map: LabelMap | None = None) -> StatsReport:
    """Scene/turn totals, word-count and scene-length moments, speaker shares.

    Sentence length is the whitespace-separated word count of a turn; scene
    length is the number of turns in a scene. Frequencies are over labels when
    a label map is given, raw speaker names otherwise.
    """
    sentence_lengths = [t.n_words for _, t in corpus.iter_turns()]
    scene_lengths = [len(s.turns) for s in corpus.scenes]
    counts: Counter[str] = Counter()
    for _, turn in corpus.iter_turns():
        counts[label_map.label_for(turn.speaker) if label_map else turn.speaker] += 1
    total = sum(counts.values())
    return StatsReport(
        n_scenes=corpus.n_scenes,
        n_turns=corpus.n_turns,
        mean_sentence_length=float(np.mean(sentence_lengths)) if sentence_lengths else 0.0,
        std_sentence_length=float(np.std(sentence_lengths)) if sentence_lengths else 0.0,
        mean_scene_length=float(np.mean(scene_lengths)) if scene_lengths else 0.0,
        std_scene_length=float(np.std(scene_lengths)) if scene_lengths else 0.0,
        speaker_frequencies={name: 100.0 * c / total for name, c in counts.items()} if total else {},
    )
