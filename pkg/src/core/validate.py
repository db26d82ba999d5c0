from __future__ import annotations

from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from src.core.layout import BiosignalLayout, Condition, RawGesture


class ValidationError(ValueError):
    pass


REQUIRED_KEYS = ("label", "participant", "condition", "trial", "signals")


def check_layout(layout: BiosignalLayout) -> None:
    if not layout.groups:
        raise ValidationError("layout must declare at least one biosignal group")
    seen = set()
    for g in layout.groups:
        if not g.name:
            raise ValidationError("group names must be non-empty")
        if g.name in seen:
            raise ValidationError(f"duplicate group name: {g.name!r}")
        seen.add(g.name)
        if int(g.channel_count) < 1:
            raise ValidationError(f"group {g.name!r}: channel_count must be >= 1, got {g.channel_count}")
        if not np.isfinite(g.sample_rate_hz) or g.sample_rate_hz <= 0:
            raise ValidationError(f"group {g.name!r}: sample_rate_hz must be positive, got {g.sample_rate_hz}")


def _to_int_or_none(x: Any) -> Optional[int]:
    if isinstance(x, bool):
        return None
    if isinstance(x, int):
        return x
    if isinstance(x, float) and x.is_integer():
        return int(x)
    if isinstance(x, str):
        s = x.strip()
        try:
            return int(s)
        except ValueError:
            return None
    return None


def _coerce_channels(group: str, raw: Any) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"signals.{group} must be a non-empty list of channels")
    lengths = set()
    for ch in raw:
        if not isinstance(ch, list):
            raise ValidationError(f"signals.{group}: every channel must be a list of numbers")
        lengths.add(len(ch))
    if len(lengths) != 1:
        raise ValidationError(f"signals.{group}: channels have unequal sample counts {sorted(lengths)}")
    cells = np.asarray(raw, dtype=object)
    if cells.ndim != 2:
        raise ValidationError(f"signals.{group}: every channel must be a flat list of numbers")
    # JSON numbers only; bool is an int subclass, strings are not coerced
    bad = set(map(type, cells.ravel())) - {int, float}
    if bad:
        names = ", ".join(sorted(t.__name__ for t in bad))
        raise ValidationError(f"signals.{group}: non-numeric sample of type {names}")
    return cells.astype(np.float64)


def check_gesture(gesture: RawGesture, layout: BiosignalLayout) -> None:
    """Raise ValidationError unless `gesture` matches `layout` exactly."""
    expected = set(layout.names)
    got = set(gesture.signals)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise ValidationError(f"signal groups do not match layout (missing={missing}, unexpected={extra})")

    for g in layout.groups:
        arr = gesture.signals[g.name]
        if arr.ndim != 2:
            raise ValidationError(f"signals.{g.name} must be 2-D (channels x samples)")
        if arr.shape[0] != g.channel_count:
            raise ValidationError(
                f"channel-count mismatch in group {g.name!r}: expected {g.channel_count}, got {arr.shape[0]}"
            )
        if arr.shape[1] < 2:
            raise ValidationError(f"group {g.name!r} needs at least 2 samples per channel, got {arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"non-finite sample in group {g.name!r}")


def gesture_from_record(data: Any, layout: BiosignalLayout) -> RawGesture:
    if not isinstance(data, Mapping):
        raise ValidationError("gesture record must be a JSON object")

    for key in REQUIRED_KEYS:
        if key not in data:
            raise ValidationError(f"Missing key: {key}")

    label = data["label"]
    if not isinstance(label, str) or not label.strip():
        raise ValidationError("label must be a non-empty string")

    try:
        condition = Condition(str(data["condition"]))
    except ValueError as e:
        allowed = ", ".join(c.value for c in Condition)
        raise ValidationError(f"unknown condition {data['condition']!r} (allowed: {allowed})") from e

    trial = _to_int_or_none(data["trial"])
    if trial is None:
        raise ValidationError(f"trial must be an integer, got {data['trial']!r}")

    signals = data["signals"]
    if not isinstance(signals, Mapping):
        raise ValidationError("signals must be an object keyed by group name")
    arrays: Dict[str, np.ndarray] = {name: _coerce_channels(name, raw) for name, raw in signals.items()}

    gesture = RawGesture(
        label=label,
        participant=str(data["participant"]),
        condition=condition,
        trial=trial,
        signals=arrays,
    )
    check_gesture(gesture, layout)
    return gesture


def check_all(gestures: List[RawGesture], layout: BiosignalLayout) -> None:
    for i, g in enumerate(gestures):
        try:
            check_gesture(g, layout)
        except ValidationError as e:
            raise ValidationError(f"gesture {i} ({g.label!r}, trial {g.trial}): {e}") from e
