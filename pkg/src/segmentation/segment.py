from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence

import numpy as np
from tqdm import tqdm

from src.core.layout import BiosignalLayout, RawGesture
from src.dsp.envelope import rectify, rms_windows
from src.segmentation.heuristics import SegmentationError, candidate_cutoffs

logger = logging.getLogger(__name__)

__all__ = [
    "SegmentationError",
    "SegmentBounds",
    "SegmentationConfig",
    "participant_max_amplitudes",
    "select_relevant_channels",
    "segment",
    "segment_dataset",
    "crop",
]


@dataclass(frozen=True)
class SegmentBounds:
    start_s: float
    stop_s: float

    def to_dict(self) -> Dict[str, float]:
        return {"start_s": self.start_s, "stop_s": self.stop_s}


@dataclass(frozen=True)
class SegmentationConfig:
    emg_group: str = "emg"
    rms_window_s: float = 0.100
    rms_hop_s: float = 0.050
    top_amplitude: int = 3
    top_variance: int = 3
    variance_floor: float = 0.1
    wrong_area_fraction: float = 1.0 / 3.0
    # peak RMS over the quiet-floor percentile a channel needs to count as active
    activity_ratio: float = 3.0
    floor_percentile: float = 10.0


def participant_max_amplitudes(
    gestures: Sequence[RawGesture],
    emg_group: str = "emg",
) -> Dict[str, np.ndarray]:
    """Per participant, the largest rectified sample of each EMG channel across all gestures."""
    out: Dict[str, np.ndarray] = {}
    for g in gestures:
        peak = np.abs(g.samples(emg_group)).max(axis=1)
        prev = out.get(g.participant)
        out[g.participant] = peak if prev is None else np.maximum(prev, peak)
    return out


def _top(values: np.ndarray, k: int) -> List[int]:
    return [int(i) for i in np.argsort(-values, kind="stable")[:k]]


def select_relevant_channels(
    emg_abs: np.ndarray,
    participant_max: Sequence[float],
    config: SegmentationConfig = SegmentationConfig(),
) -> List[int]:
    """
    Union of the highest-amplitude channels (ranked by participant-wide
    maxima) and the highest-variance channels of this gesture, minus channels
    whose variance is below `variance_floor` of the largest. Sorted ascending.
    """
    emg_abs = np.atleast_2d(np.asarray(emg_abs, dtype=np.float64))
    amplitudes = np.asarray(participant_max, dtype=np.float64)
    variances = emg_abs.var(axis=1)

    chosen = set(_top(amplitudes, config.top_amplitude)) | set(_top(variances, config.top_variance))
    floor = config.variance_floor * variances.max()
    return sorted(ch for ch in chosen if variances[ch] >= floor)


def _emg(gesture: RawGesture, layout: BiosignalLayout, config: SegmentationConfig):
    try:
        group = layout.group(config.emg_group)
    except KeyError:
        raise SegmentationError(f"layout has no EMG group named {config.emg_group!r}") from None
    return group, gesture.samples(group.name)


def segment(
    gesture: RawGesture,
    layout: BiosignalLayout,
    participant_max: Sequence[float],
    config: SegmentationConfig = SegmentationConfig(),
) -> SegmentBounds:
    """
    Gesture start/stop in seconds from the RMS of the rectified raw EMG.
    Takes the earliest start and latest stop over every heuristic of every
    relevant channel; falls back to the whole recording when nothing usable
    is found.
    """
    group, emg = _emg(gesture, layout, config)
    rate = group.sample_rate_hz
    duration = emg.shape[1] / rate
    full = SegmentBounds(0.0, duration)

    window = max(1, int(round(config.rms_window_s * rate)))
    hop = max(1, int(round(config.rms_hop_s * rate)))
    if emg.shape[1] < window + 3 * hop:
        logger.debug("Recording too short for segmentation (%d samples)", emg.shape[1])
        return full

    emg_abs = rectify(emg)
    rms = np.vstack([rms_windows(ch, window, hop) for ch in emg_abs])
    length = rms.shape[1]

    channels = select_relevant_channels(emg_abs, participant_max, config)
    active = [ch for ch in channels if rms[ch].max() > config.activity_ratio * np.percentile(rms[ch], config.floor_percentile)]
    if not active:
        logger.debug("No active EMG channel in %s trial %s; keeping full recording", gesture.label, gesture.trial)
        return full

    late = length * (1.0 - config.wrong_area_fraction)
    early = length * config.wrong_area_fraction
    starts: List[int] = []
    stops: List[int] = []
    for ch in active:
        cands = candidate_cutoffs(rms[ch])
        starts.extend(i for i in cands.starts if i < late)
        stops.extend(i for i in cands.stops if i >= early)

    if not starts or not stops:
        return full
    start_idx, stop_idx = min(starts), max(stops)

    start_s = start_idx * hop / rate
    stop_s = min(duration, (stop_idx * hop + window) / rate)
    if start_s >= stop_s:
        return full
    return SegmentBounds(start_s, stop_s)


def segment_dataset(
    layout: BiosignalLayout,
    gestures: Sequence[RawGesture],
    config: SegmentationConfig = SegmentationConfig(),
    progress: bool = False,
) -> List[SegmentBounds]:
    if config.emg_group not in layout.names:
        raise SegmentationError(f"layout has no EMG group named {config.emg_group!r}")
    maxima = participant_max_amplitudes(gestures, config.emg_group)
    return [
        segment(g, layout, maxima[g.participant], config)
        for g in tqdm(gestures, desc="Segmenting", disable=None if progress else True)
    ]


def crop(gesture: RawGesture, bounds: SegmentBounds, layout: BiosignalLayout) -> RawGesture:
    """Slice every group to the same time interval using its own sample rate."""
    cropped: Dict[str, np.ndarray] = {}
    for g in layout.groups:
        x = gesture.samples(g.name)
        n = x.shape[1]
        i0 = min(n - 2, max(0, math.floor(bounds.start_s * g.sample_rate_hz)))
        i1 = min(n, max(i0 + 2, math.ceil(bounds.stop_s * g.sample_rate_hz)))
        cropped[g.name] = x[:, i0:i1]
    return gesture.with_signals(cropped)


def bounds_report(gestures: Sequence[RawGesture], bounds: Sequence[SegmentBounds]) -> List[Mapping[str, object]]:
    return [
        {
            "index": i,
            "label": g.label,
            "participant": g.participant,
            "condition": g.condition.value,
            "trial": g.trial,
            **b.to_dict(),
        }
        for i, (g, b) in enumerate(zip(gestures, bounds))
    ]
