from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from src.core.config import RecognizerConfig
from src.core.layout import BiosignalLayout, LatentTemplate
from src.core.validate import ValidationError

STORE_FORMAT = "gesture-templates/1"


class TemplateStoreError(ValueError):
    pass


@dataclass(frozen=True)
class TemplateStore:
    config: RecognizerConfig
    layout: BiosignalLayout
    templates: Tuple[LatentTemplate, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": STORE_FORMAT,
            "config": {"n": self.config.n, "nPC": self.config.n_pc},
            "layout_hash": self.layout.fingerprint(),
            "layout": self.layout.to_dict(),
            "templates": [
                {"label": t.label, "components": t.components.tolist(), "points": t.points.tolist()}
                for t in self.templates
            ],
        }


def save_template_store(store: TemplateStore, path: Union[str, Path]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            json.dump(store.to_dict(), f, allow_nan=False)
    except OSError as e:
        raise TemplateStoreError(f"cannot write template store {path}: {e}") from e


def load_template_store(path: Union[str, Path]) -> TemplateStore:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise TemplateStoreError(f"template store not found: {path}") from e
    except json.JSONDecodeError as e:
        raise TemplateStoreError(f"{path}: invalid JSON ({e})") from e

    if not isinstance(data, dict) or data.get("format") != STORE_FORMAT:
        raise TemplateStoreError(f"{path}: not a {STORE_FORMAT} file")
    try:
        config = RecognizerConfig.from_dict(data["config"])
        layout = BiosignalLayout.from_dict(data["layout"])
    except (KeyError, ValidationError) as e:
        raise TemplateStoreError(f"{path}: bad header ({e})") from e
    if layout.fingerprint() != data.get("layout_hash"):
        raise TemplateStoreError(f"{path}: layout hash does not match the stored layout")

    templates: List[LatentTemplate] = []
    for i, rec in enumerate(data.get("templates") or []):
        try:
            label = rec["label"]
            if not isinstance(label, str) or not label:
                raise TypeError("label must be a non-empty string")
            components = np.asarray(rec["components"], dtype=np.float64).reshape(layout.total_channels, config.n_pc)
            points = np.asarray(rec["points"], dtype=np.float64).reshape(config.n * config.n_pc)
        except (KeyError, ValueError, TypeError) as e:
            raise TemplateStoreError(f"{path}: template {i} is malformed ({e})") from e
        templates.append(
            LatentTemplate(label=label, components=components, points=points, n=config.n, n_pc=config.n_pc)
        )
    return TemplateStore(config=config, layout=layout, templates=tuple(templates))
