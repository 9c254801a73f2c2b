"""Run configuration: a single serializable record of everything a run needs.

Config files are JSON with full-line comments allowed (lines whose first
non-blank character is '#' or '//'). Unknown keys are rejected so typos fail
fast, and every run writes its resolved config next to its outputs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .corpus import LABEL_PRESETS, LabelMap, SplitSpec
from .errors import ConfigError


@dataclass(frozen=True)
class SplitConfig:
    mode: str = "by_season"
    valid_seasons: tuple[int, ...] = ()
    test_seasons: tuple[int, ...] = ()
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    seasons: tuple[int, ...] | None = None  # restrict the corpus before splitting

    def to_spec(self) -> SplitSpec:
        if self.mode == "by_season":
            return SplitSpec.by_season(self.valid_seasons, self.test_seasons)
        if self.mode == "random":
            return SplitSpec.random_split(self.ratios, self.seed)
        raise ConfigError(f"unknown split mode {self.mode!r}")


@dataclass(frozen=True)
class LabelConfig:
    preset: str | None = None
    main_speakers: tuple[str, ...] = ()
    other_label: str = "Other"

    def to_map(self) -> LabelMap:
        if self.preset is not None:
            if self.main_speakers:
                raise ConfigError("give either a label preset or main_speakers, not both")
            return LabelMap.preset(self.preset)
        if not self.main_speakers:
            raise ConfigError("label_map needs a preset or a main_speakers list")
        return LabelMap(main_speakers=tuple(self.main_speakers), other_label=self.other_label)


@dataclass(frozen=True)
class RunConfig:
    corpus: str = ""
    output_dir: str = ""
    label_map: LabelConfig = field(default_factory=LabelConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    max_previous_context: int = 5
    include_speaker_tokens: bool = True
    feature_mode: str = "word"
    activation_file: str | None = None
    vocab_min_freq: int = 1
    vocab_max_size: int | None = None
    k: int = 409
    membership: str = "pareto80_20"
    N: float | None = None
    top_n: int = 2
    tau: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.feature_mode not in ("word", "activations"):
            raise ConfigError(f"unknown feature mode {self.feature_mode!r}")
        if self.k <= 0:
            raise ConfigError("k must be positive")
        if self.max_previous_context < 0:
            raise ConfigError("max_previous_context must be >= 0")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["label_map"] = {k: v for k, v in data["label_map"].items()}
        data["label_map"]["main_speakers"] = list(self.label_map.main_speakers)
        data["split"] = dict(data["split"])
        data["split"]["valid_seasons"] = list(self.split.valid_seasons)
        data["split"]["test_seasons"] = list(self.split.test_seasons)
        data["split"]["ratios"] = list(self.split.ratios)
        data["split"]["seasons"] = None if self.split.seasons is None else list(self.split.seasons)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _reject_unknown(data: dict, allowed: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {f.name for f in fields(RunConfig)}
    _reject_unknown(data, allowed, "config")
    kwargs = dict(data)
    if "label_map" in kwargs:
        raw = kwargs["label_map"]
        _reject_unknown(raw, {f.name for f in fields(LabelConfig)}, "label_map")
        kwargs["label_map"] = LabelConfig(
            preset=raw.get("preset"),
            main_speakers=tuple(raw.get("main_speakers", ())),
            other_label=raw.get("other_label", "Other"),
        )
    if "split" in kwargs:
        raw = kwargs["split"]
        _reject_unknown(raw, {f.name for f in fields(SplitConfig)}, "split")
        seasons = raw.get("seasons")
        kwargs["split"] = SplitConfig(
            mode=raw.get("mode", "by_season"),
            valid_seasons=tuple(raw.get("valid_seasons", ())),
            test_seasons=tuple(raw.get("test_seasons", ())),
            ratios=tuple(raw.get("ratios", (0.8, 0.1, 0.1))),
            seed=raw.get("seed", 0),
            seasons=None if seasons is None else tuple(seasons),
        )
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from None


def strip_comments(text: str) -> str:
    kept = []
    for line in text.splitlines():
        stripped = line.lstrip()
        if stripped.startswith("#") or stripped.startswith("//"):
            continue
        kept.append(line)
    return "\n".join(kept)


def load_config(path: str | Path) -> RunConfig:
    text = strip_comments(Path(path).read_text(encoding="utf-8"))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON after comment stripping: {exc.msg}") from None
    return config_from_dict(data)
