from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

from src.core.layout import BiosignalLayout, RawGesture
from src.core.validate import ValidationError, check_all, gesture_from_record

logger = logging.getLogger(__name__)

LAYOUT_FILE = "layout.json"
GESTURES_FILE = "gestures.jsonl"

PathLike = Union[str, Path]


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    layout: BiosignalLayout
    gestures: Tuple[RawGesture, ...]


def read_layout(path: PathLike) -> BiosignalLayout:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"missing layout file: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetError(f"{path}: invalid JSON ({e})") from e
    try:
        return BiosignalLayout.from_dict(data)
    except ValidationError as e:
        raise DatasetError(f"{path}: {e}") from e


def read_gestures_jsonl(path: PathLike, layout: BiosignalLayout) -> List[RawGesture]:
    path = Path(path)
    items: List[RawGesture] = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({e})") from e
            try:
                items.append(gesture_from_record(record, layout))
            except ValidationError as e:
                raise DatasetError(f"{path}:{lineno}: {e}") from e
    return items


def load_dataset(path: PathLike) -> Dataset:
    """
    Read `layout.json` and every `*.jsonl` file of a dataset directory.
    Gestures come back in file-name order, then line order.
    """
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"dataset directory not found: {root}")

    layout = read_layout(root / LAYOUT_FILE)
    files = sorted(root.glob("*.jsonl"))
    if not files:
        raise DatasetError(f"no .jsonl gesture files in {root}")

    gestures: List[RawGesture] = []
    for p in files:
        gestures.extend(read_gestures_jsonl(p, layout))

    logger.debug("Loaded %d gestures from %d file(s) in %s", len(gestures), len(files), root)
    return Dataset(layout=layout, gestures=tuple(gestures))


def save_dataset(location: PathLike, layout: BiosignalLayout, gestures: Sequence[RawGesture]) -> None:
    """
    Write `layout.json` and `gestures.jsonl`. Every gesture is validated before
    anything touches the disk. Floats use Python's shortest round-trip repr, so
    load_dataset reproduces the samples bit for bit.
    """
    gestures = list(gestures)
    try:
        check_all(gestures, layout)
    except ValidationError as e:
        raise DatasetError(f"refusing to write invalid dataset: {e}") from e

    out_dir = Path(location)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / LAYOUT_FILE).open("w", encoding="utf-8") as f:
            json.dump(layout.to_dict(), f, indent=2)
        with (out_dir / GESTURES_FILE).open("w", encoding="utf-8") as f:
            for g in gestures:
                f.write(json.dumps(g.to_record(), allow_nan=False) + "\n")
    except OSError as e:
        raise DatasetError(f"cannot write dataset to {out_dir}: {e}") from e

    logger.debug("Wrote %d gestures to %s", len(gestures), out_dir)
