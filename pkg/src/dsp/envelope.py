from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from src.core.layout import BiosignalGroup, BiosignalLayout, RawGesture
from src.dsp.filters import envelope_filters, filter_forward

logger = logging.getLogger(__name__)


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class EnvelopeConfig:
    cutoff_hz: float = 40.0
    order: int = 4
    window_s: float = 0.100
    hop_s: float = 0.050

    def window_samples(self, sample_rate_hz: float) -> int:
        return max(1, int(round(self.window_s * sample_rate_hz)))

    def hop_samples(self, sample_rate_hz: float) -> int:
        return max(1, int(round(self.hop_s * sample_rate_hz)))


def rectify(x: Sequence[float]) -> np.ndarray:
    return np.abs(np.asarray(x, dtype=np.float64))


def _window_view(x: np.ndarray, window: int, hop: int) -> np.ndarray:
    if window < 1 or hop < 1:
        raise WindowError(f"window and hop must be positive (window={window}, hop={hop})")
    if hop > window:
        raise WindowError(f"hop ({hop}) must not exceed window ({window})")
    if window > x.size:
        raise WindowError(f"window ({window}) longer than signal ({x.size})")
    # Only windows that fit entirely inside the signal are emitted.
    return np.lib.stride_tricks.sliding_window_view(x, window)[::hop]


def moving_average_downsample(x: Sequence[float], window: int, hop: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return _window_view(x, window, hop).mean(axis=1)


def rms_windows(x: Sequence[float], window: int, hop: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sqrt(np.mean(np.square(_window_view(x, window, hop)), axis=1))


def diff(x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise WindowError(f"diff needs at least 2 samples, got {x.size}")
    return np.diff(x)


def emg_linear_envelope(x: Sequence[float], sample_rate_hz: float, config: EnvelopeConfig = EnvelopeConfig()) -> np.ndarray:
    """
    highpass -> rectify -> lowpass -> windowed mean. With the defaults a
    2000 Hz channel comes out at 20 Hz. The lowpass may undershoot zero.
    """
    highpass, lowpass = envelope_filters(sample_rate_hz, config.cutoff_hz, config.order)
    y = filter_forward(highpass, x)
    y = rectify(y)
    y = filter_forward(lowpass, y)
    return moving_average_downsample(
        y,
        window=config.window_samples(sample_rate_hz),
        hop=config.hop_samples(sample_rate_hz),
    )


def envelope_group(group: BiosignalGroup, config: EnvelopeConfig = EnvelopeConfig()) -> BiosignalGroup:
    rate = group.sample_rate_hz / config.hop_samples(group.sample_rate_hz)
    return BiosignalGroup(name=group.name, channel_count=group.channel_count, sample_rate_hz=rate)


def preprocess_layout(layout: BiosignalLayout, emg_groups: Iterable[str], config: EnvelopeConfig = EnvelopeConfig()) -> BiosignalLayout:
    emg = set(emg_groups)
    return BiosignalLayout(
        groups=tuple(envelope_group(g, config) if g.name in emg else g for g in layout.groups)
    )


def preprocess_gesture(
    gesture: RawGesture,
    layout: BiosignalLayout,
    emg_groups: Iterable[str],
    config: EnvelopeConfig = EnvelopeConfig(),
) -> RawGesture:
    """Replace each listed EMG group by its linear envelope; other groups pass through."""
    replaced = {}
    for name in emg_groups:
        rate = layout.group(name).sample_rate_hz
        channels = gesture.samples(name)
        replaced[name] = np.vstack([emg_linear_envelope(ch, rate, config) for ch in channels])
        logger.debug("Envelope %s: %d -> %d samples", name, channels.shape[1], replaced[name].shape[1])
    return gesture.with_signals(replaced)
