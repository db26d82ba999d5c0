from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np


class Condition(str, Enum):
    PERSONALIZED = "personalized"
    VARIATION_TIME = "variation_time"
    VARIATION_SPEED = "variation_speed"
    VARIATION_SIZE = "variation_size"
    STANDARDIZED = "standardized"

    @classmethod
    def variation(cls, kind: str) -> "Condition":
        return cls(f"variation_{kind}")


VARIATION_KINDS = ("time", "speed", "size")


@dataclass(frozen=True)
class BiosignalGroup:
    name: str
    channel_count: int
    sample_rate_hz: float

    def is_emg(self) -> bool:
        return self.name.lower().startswith("emg")


@dataclass(frozen=True)
class BiosignalLayout:
    """
    Ordered biosignal groups. Group order, then channel order inside a group,
    fixes the row order of every stacked c x n matrix.
    """
    groups: Tuple[BiosignalGroup, ...]

    def __post_init__(self):
        # Imported lazily: validate.py depends on this module.
        from src.core.validate import check_layout

        object.__setattr__(self, "groups", tuple(self.groups))
        check_layout(self)

    @property
    def total_channels(self) -> int:
        return sum(g.channel_count for g in self.groups)

    @property
    def names(self) -> List[str]:
        return [g.name for g in self.groups]

    def group(self, name: str) -> BiosignalGroup:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)

    def channel_slices(self) -> Dict[str, slice]:
        out: Dict[str, slice] = {}
        start = 0
        for g in self.groups:
            out[g.name] = slice(start, start + g.channel_count)
            start += g.channel_count
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "groups": [
                {"name": g.name, "channels": g.channel_count, "sample_rate_hz": float(g.sample_rate_hz)}
                for g in self.groups
            ]
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BiosignalLayout":
        from src.core.validate import ValidationError

        groups = data.get("groups") if isinstance(data, Mapping) else None
        if not isinstance(groups, list):
            raise ValidationError("layout must contain a 'groups' list")
        out = []
        for i, g in enumerate(groups):
            if not isinstance(g, Mapping):
                raise ValidationError(f"layout group {i} must be an object")
            try:
                out.append(
                    BiosignalGroup(
                        name=str(g["name"]),
                        channel_count=int(g["channels"]),
                        sample_rate_hz=float(g["sample_rate_hz"]),
                    )
                )
            except KeyError as e:
                raise ValidationError(f"layout group {i} is missing {e.args[0]!r}") from e
            except (TypeError, ValueError) as e:
                raise ValidationError(f"layout group {i} has a non-numeric field ({e})") from e
        return cls(groups=tuple(out))

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_layout() -> BiosignalLayout:
    """16 EMG channels at 2000 Hz and 12 IMU sensors x 6 axes at 148 Hz (c = 88)."""
    return BiosignalLayout(
        groups=(
            BiosignalGroup("emg", 16, 2000.0),
            BiosignalGroup("imu", 72, 148.0),
        )
    )


def _frozen(arr: Any) -> np.ndarray:
    a = np.array(arr, dtype=np.float64)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RawGesture:
    """
    One recorded gesture. `signals` maps group name to a (channels, N) array;
    N may differ between groups.
    """
    label: str
    participant: str
    condition: Condition
    trial: int
    signals: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "condition", Condition(self.condition))
        object.__setattr__(self, "signals", {k: _frozen(v) for k, v in self.signals.items()})

    def samples(self, group: str) -> np.ndarray:
        return self.signals[group]

    def duration_s(self, layout: BiosignalLayout) -> float:
        return max(self.signals[g.name].shape[1] / g.sample_rate_hz for g in layout.groups)

    def with_signals(self, signals: Mapping[str, Any], **changes: Any) -> "RawGesture":
        merged = dict(self.signals)
        merged.update(signals)
        kwargs = {
            "label": self.label,
            "participant": self.participant,
            "condition": self.condition,
            "trial": self.trial,
        }
        kwargs.update(changes)
        return RawGesture(signals=merged, **kwargs)

    def to_record(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "participant": self.participant,
            "condition": self.condition.value,
            "trial": int(self.trial),
            "signals": {k: v.tolist() for k, v in self.signals.items()},
        }


@dataclass(frozen=True)
class ProcessedGesture:
    """The c x n matrix D after resampling and per-group normalization."""
    data: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        d = np.array(self.data, dtype=np.float64)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def n(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[0])


@dataclass(frozen=True)
class LatentTemplate:
    label: str
    components: np.ndarray
    points: np.ndarray
    n: int
    n_pc: int

    def __post_init__(self):
        for name in ("components", "points"):
            a = np.array(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def channels(self) -> int:
        return int(self.components.shape[0])


@dataclass(frozen=True)
class RecognitionResult:
    matched_label: str
    matched_template_index: int
    distance: float
    all_distances: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matched_label": self.matched_label,
            "matched_template_index": self.matched_template_index,
            "distance": self.distance,
            "all_distances": list(self.all_distances),
        }
