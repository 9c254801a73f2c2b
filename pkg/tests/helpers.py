import json
from pathlib import Path

from speakerfp.corpus import Scene, Turn

DATA = Path(__file__).parent / "data"


def make_scene(scene_id, rows, season=None, episode="e01"):
    """rows: list of (speaker, text) pairs."""
    turns = tuple(Turn(speaker=s, text=t, index=i) for i, (s, t) in enumerate(rows))
    return Scene(scene_id=scene_id, episode=episode, turns=turns, season=season)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path
