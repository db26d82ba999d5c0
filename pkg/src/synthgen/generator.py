from __future__ import annotations

import logging
import zlib
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.core.layout import (
    VARIATION_KINDS,
    BiosignalGroup,
    BiosignalLayout,
    Condition,
    RawGesture,
    default_layout,
)

logger = logging.getLogger(__name__)

# Command vocabulary of the personalized condition; classes past
# the tenth fall back to numbered labels.
FUNCTION_LABELS = (
    "move", "select", "rotate", "delete", "pan",
    "close", "zoom-in", "zoom-out", "open", "duplicate",
)

# Stream purposes for SeedSequence spawn keys.
_PROTOTYPE, _PARTICIPANT, _TRIAL, _VARIATION, _CHANNELS = 1, 2, 3, 4, 5

_CONDITION_CODES = {c: i for i, c in enumerate(Condition)}


class SynthSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    classes: int = 10
    trials_per_class: int = 10
    layout: BiosignalLayout = field(default_factory=default_layout)
    active_channels_per_class: int = 12
    noise_sigma: float = 0.05
    amplitude_jitter: Tuple[float, float] = (0.8, 1.2)
    duration_s: float = 2.0
    speed_factor: float = 2.0
    size_factor: float = 2.0
    drift_factor: float = 1.5
    participants: int = 2
    participant_spread: float = 0.25
    standardized_trials: Optional[int] = None
    variation_trials: int = 3
    variation_classes: int = 1
    emg_scale: float = 1e-4
    imu_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "amplitude_jitter", tuple(float(v) for v in self.amplitude_jitter))
        lo, hi = self.amplitude_jitter
        problems = []
        if self.classes < 1:
            problems.append("classes must be >= 1")
        if self.trials_per_class < 1:
            problems.append("trials_per_class must be >= 1")
        if self.participants < 1:
            problems.append("participants must be >= 1")
        if not 1 <= self.active_channels_per_class <= self.layout.total_channels:
            problems.append(
                f"active_channels_per_class must be in [1, {self.layout.total_channels}], "
                f"got {self.active_channels_per_class}"
            )
        if self.noise_sigma < 0:
            problems.append("noise_sigma must be >= 0")
        if not 0 < lo <= hi:
            problems.append(f"amplitude_jitter must satisfy 0 < lo <= hi, got {self.amplitude_jitter}")
        if self.duration_s <= 0:
            problems.append("duration_s must be positive")
        for name in ("speed_factor", "size_factor", "drift_factor", "emg_scale", "imu_scale"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive")
        if self.participant_spread < 0:
            problems.append("participant_spread must be >= 0")
        if self.standardized_trials is not None and self.standardized_trials < 0:
            problems.append("standardized_trials must be >= 0")
        if self.variation_trials < 0 or self.variation_classes < 0:
            problems.append("variation_trials and variation_classes must be >= 0")
        for g in self.layout.groups:
            if int(round(self.duration_s * g.sample_rate_hz)) < 2:
                problems.append(f"duration_s too short for group {g.name!r}")
        if problems:
            raise SynthSpecError("; ".join(problems))

    @property
    def n_standardized(self) -> int:
        return self.trials_per_class if self.standardized_trials is None else self.standardized_trials

    def labels(self) -> List[str]:
        if self.classes <= len(FUNCTION_LABELS):
            return list(FUNCTION_LABELS[: self.classes])
        return [f"gesture_{k:02d}" for k in range(self.classes)]

    def group_scale(self, group: BiosignalGroup) -> float:
        return self.emg_scale if group.is_emg() else self.imu_scale

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["layout"] = self.layout.to_dict()
        d["amplitude_jitter"] = list(self.amplitude_jitter)
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SynthSpec":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise SynthSpecError(f"unknown SynthSpec field(s): {', '.join(unknown)}")
        if "layout" in data and not isinstance(data["layout"], BiosignalLayout):
            data["layout"] = BiosignalLayout.from_dict(data["layout"])
        return cls(**data)


def _stream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream for a fixed key; adding keys never shifts others."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def _text_key(*parts: object) -> int:
    return zlib.crc32("/".join(str(p) for p in parts).encode("utf-8"))


@dataclass(frozen=True)
class Waveform:
    """Sum of Gaussian-windowed sinusoids; every array has one entry per component."""
    amp: np.ndarray
    freq_hz: np.ndarray
    phase: np.ndarray
    center_s: np.ndarray
    width_s: np.ndarray

    def __call__(self, t: np.ndarray) -> np.ndarray:
        dt = t[np.newaxis, :] - self.center_s[:, np.newaxis]
        window = np.exp(-0.5 * (dt / self.width_s[:, np.newaxis]) ** 2)
        carrier = np.sin(2.0 * np.pi * self.freq_hz[:, np.newaxis] * dt + self.phase[:, np.newaxis])
        return (self.amp[:, np.newaxis] * window * carrier).sum(axis=0)


def random_waveform(rng: np.random.Generator, duration_s: float) -> Waveform:
    k = int(rng.integers(2, 5))
    return Waveform(
        amp=rng.uniform(0.5, 1.0, k),
        freq_hz=rng.uniform(0.5, 3.0, k),
        phase=rng.uniform(0.0, 2.0 * np.pi, k),
        center_s=rng.uniform(0.35, 0.65, k) * duration_s,
        width_s=rng.uniform(0.06, 0.12, k) * duration_s,
    )


@dataclass(frozen=True)
class ClassPrototype:
    label: str
    active: Tuple[int, ...]
    waveforms: Tuple[Waveform, ...]


def class_prototypes(spec: SynthSpec) -> List[ClassPrototype]:
    c = spec.layout.total_channels
    out = []
    for k, label in enumerate(spec.labels()):
        pick = _stream(spec.seed, _CHANNELS, k)
        active = tuple(int(i) for i in np.sort(pick.choice(c, spec.active_channels_per_class, replace=False)))
        waves = tuple(random_waveform(_stream(spec.seed, _PROTOTYPE, k, ch), spec.duration_s) for ch in active)
        out.append(ClassPrototype(label=label, active=active, waveforms=waves))
    return out


def _participant_id(p: int) -> str:
    return f"P{p + 1:03d}"


def _render(
    spec: SynthSpec,
    proto: ClassPrototype,
    participant: int,
    condition: Condition,
    class_index: int,
    trial: int,
) -> RawGesture:
    layout = spec.layout
    lo, hi = spec.amplitude_jitter
    slices = layout.channel_slices()
    active = dict(zip(proto.active, proto.waveforms))
    cond_code = _CONDITION_CODES[condition]

    signals: Dict[str, np.ndarray] = {}
    for g in layout.groups:
        n_samples = int(round(spec.duration_s * g.sample_rate_hz))
        t = np.arange(n_samples) / g.sample_rate_hz
        scale = spec.group_scale(g)
        block = np.zeros((g.channel_count, n_samples))
        for local, ch in enumerate(range(slices[g.name].start, slices[g.name].stop)):
            rng = _stream(spec.seed, _TRIAL, participant, cond_code, class_index, trial, ch)
            jitter = rng.uniform(lo, hi)
            if ch in active:
                wave = active[ch](t)
                if spec.participant_spread > 0:
                    dev = random_waveform(_stream(spec.seed, _PARTICIPANT, participant, class_index, ch), spec.duration_s)
                    wave = wave + spec.participant_spread * dev(t)
                block[local] = scale * jitter * wave
            if spec.noise_sigma > 0:
                block[local] += rng.normal(0.0, spec.noise_sigma * scale, n_samples)
        signals[g.name] = block

    return RawGesture(
        label=proto.label,
        participant=_participant_id(participant),
        condition=condition,
        trial=trial,
        signals=signals,
    )


def _compress(x: np.ndarray, factor: float) -> np.ndarray:
    """Same trajectory over fewer samples; an integer factor dividing N-1 keeps every factor-th sample exactly."""
    n_in = x.shape[1]
    n_out = max(2, int(round((n_in - 1) / factor)) + 1)
    positions = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    old = np.arange(n_in, dtype=np.float64)
    return np.vstack([np.interp(positions, old, ch) for ch in x])


def generate_variation(base: RawGesture, kind: str, spec: SynthSpec) -> RawGesture:
    """
    time  -> EMG-like groups drift linearly up to drift_factor, plus fresh noise
    speed -> trajectory compressed in time by speed_factor
    size  -> every amplitude scaled by size_factor
    """
    if kind not in VARIATION_KINDS:
        raise SynthSpecError(f"unknown variation kind {kind!r} (expected one of {VARIATION_KINDS})")
    layout = spec.layout
    signals: Dict[str, np.ndarray] = {}

    for gi, g in enumerate(layout.groups):
        x = np.array(base.samples(g.name), dtype=np.float64)
        if kind == "size":
            x = x * spec.size_factor
        elif kind == "speed":
            x = _compress(x, spec.speed_factor)
        else:
            if g.is_emg():
                x = x * np.linspace(1.0, spec.drift_factor, x.shape[1])[np.newaxis, :]
            if spec.noise_sigma > 0:
                rng = _stream(spec.seed, _VARIATION, _text_key(base.participant, base.label, base.trial, kind), gi)
                x = x + rng.normal(0.0, spec.noise_sigma * spec.group_scale(g), x.shape)
        signals[g.name] = x

    return base.with_signals(signals, condition=Condition.variation(kind))


@dataclass(frozen=True)
class SynthCorpus:
    layout: BiosignalLayout
    gestures: Tuple[RawGesture, ...]


def generate(spec: SynthSpec, progress: bool = False) -> SynthCorpus:
    """
    Personalized and standardized trials for every class and participant, and
    time/speed/size variations for the first `variation_classes` classes.
    Fully determined by the seed.
    """
    protos = class_prototypes(spec)
    jobs: List[Tuple[int, Condition, int, int, Optional[str]]] = []
    for p in range(spec.participants):
        for k in range(spec.classes):
            for r in range(spec.trials_per_class):
                jobs.append((p, Condition.PERSONALIZED, k, r, None))
        for kind in VARIATION_KINDS:
            for k in range(min(spec.variation_classes, spec.classes)):
                for r in range(spec.variation_trials):
                    jobs.append((p, Condition.variation(kind), k, r, kind))
        for k in range(spec.classes):
            for r in range(spec.n_standardized):
                jobs.append((p, Condition.STANDARDIZED, k, r, None))

    gestures: List[RawGesture] = []
    for p, condition, k, r, kind in tqdm(jobs, desc="Generating gestures", disable=None if progress else True):
        if kind is None:
            gestures.append(_render(spec, protos[k], p, condition, k, r))
        else:
            base = _render(spec, protos[k], p, condition, k, r)
            gestures.append(generate_variation(base, kind, spec))

    logger.info(
        "Generated %d gestures (%d classes, %d participant(s), seed %d)",
        len(gestures), spec.classes, spec.participants, spec.seed,
    )
    return SynthCorpus(layout=spec.layout, gestures=tuple(gestures))


def with_overrides(spec: SynthSpec, **changes: Any) -> SynthSpec:
    return replace(spec, **{k: v for k, v in changes.items() if v is not None})
