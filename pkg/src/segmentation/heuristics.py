from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.dsp.envelope import diff


class SegmentationError(ValueError):
    pass


AGGRESSIVE_THRESHOLD = 0.3
CONSERVATIVE_THRESHOLD = 0.15


def largest_slope(derivative: np.ndarray, maximize: bool = True, allowed: Optional[np.ndarray] = None) -> Optional[int]:
    """
    Index of the largest rise (argmax) or, with maximize=False, one past the
    largest fall (argmin + 1). `allowed` masks the indices that may win.
    Ties go to the lowest index.
    """
    d = np.asarray(derivative, dtype=np.float64)
    if allowed is not None:
        if not np.any(allowed):
            return None
        d = np.where(allowed, d, -np.inf if maximize else np.inf)
    if d.size == 0:
        return None
    if maximize:
        return int(np.argmax(d))
    return int(np.argmin(d)) + 1


def threshold_cutoffs(c: np.ndarray, value: float) -> Tuple[Optional[int], Optional[int]]:
    """
    Threshold at `value` of the range above the minimum. `start` is the last
    below-threshold index before the first above-threshold run that follows a
    below sample; `stop` is the first below-threshold index after the last
    above-threshold run that is followed by a below sample.
    """
    c = np.asarray(c, dtype=np.float64)
    lo, hi = float(c.min()), float(c.max())
    thr = value * (hi - lo) + lo
    below = c < thr
    idx_below = np.flatnonzero(below)
    if idx_below.size == 0 or idx_below.size == c.size:
        return None, None

    above = ~below
    first_below = idx_below[0]
    above_after = np.flatnonzero(above[first_below:])
    start = int(first_below + above_after[0] - 1) if above_after.size else None

    last_below = idx_below[-1]
    above_before = np.flatnonzero(above[: last_below + 1])
    stop = int(above_before[-1] + 1) if above_before.size else None
    return start, stop


def threshold_level(c: np.ndarray, value: float) -> float:
    return value * (float(np.max(c)) - float(np.min(c))) + float(np.min(c))


def edge_cutoffs(c: np.ndarray, thresh: float) -> Tuple[Optional[int], Optional[int]]:
    """Activity already under way at the first or still at the last sample."""
    c = np.asarray(c, dtype=np.float64)
    start = 0 if c[0] > thresh else None
    stop = c.size - 1 if c[-1] > thresh else None
    return start, stop


def _start_mask(length: int, limit: Optional[int]) -> Optional[np.ndarray]:
    if limit is None:
        return None
    return np.arange(length) <= limit


def _stop_mask(length: int, order: int, limit: Optional[int]) -> Optional[np.ndarray]:
    if limit is None:
        return None
    return np.arange(length) + order >= limit


@dataclass(frozen=True)
class CutoffCandidates:
    by_heuristic: Dict[str, Optional[int]] = field(default_factory=dict)

    @property
    def starts(self) -> List[int]:
        return [v for k, v in self.by_heuristic.items() if k.startswith("start") and v is not None]

    @property
    def stops(self) -> List[int]:
        return [v for k, v in self.by_heuristic.items() if k.startswith("stop") and v is not None]


def candidate_cutoffs(
    channel: np.ndarray,
    aggressive: float = AGGRESSIVE_THRESHOLD,
    conservative: float = CONSERVATIVE_THRESHOLD,
) -> CutoffCandidates:
    """
    All start/stop candidates for one RMS trace: global slopes, the two
    thresholds, edge checks, and slopes of the first and second difference
    restricted to the quiet region on either side of the burst.
    """
    c = np.asarray(channel, dtype=np.float64)
    if c.size < 4:
        raise SegmentationError(f"candidate cutoffs need at least 4 samples, got {c.size}")

    dc = diff(c)
    d2c = diff(dc)

    start_below_1, stop_below_1 = threshold_cutoffs(c, aggressive)
    start_below_2, stop_below_2 = threshold_cutoffs(c, conservative)
    start_above_1, stop_above_1 = edge_cutoffs(c, threshold_level(c, aggressive))

    def shifted(idx: Optional[int]) -> Optional[int]:
        # second-difference index k is centred on sample k + 1
        return None if idx is None else idx + 1

    def restricted(d: np.ndarray, maximize: bool, order: int, limit: Optional[int]) -> Optional[int]:
        mask = _start_mask(d.size, limit) if maximize else _stop_mask(d.size, order, limit)
        if mask is None:
            return None
        return largest_slope(d, maximize=maximize, allowed=mask)

    # The offset is where the fall flattens out: a convex kink, like the onset,
    # so both sides look for the largest second difference.
    stop_mask = _stop_mask(d2c.size, 2, stop_below_1)
    stop_kink = None if stop_mask is None else largest_slope(d2c, maximize=True, allowed=stop_mask)

    out: Dict[str, Optional[int]] = {
        "start_dc": largest_slope(dc, maximize=True),
        "start_above_1": start_above_1,
        "start_below_1": start_below_1,
        "start_dc_1": restricted(dc, True, 1, start_below_1),
        "start_dc_2": restricted(dc, True, 1, start_below_2),
        "start_d2c_1": shifted(restricted(d2c, True, 2, start_below_1)),
        "stop_dc": largest_slope(dc, maximize=False),
        "stop_above_1": stop_above_1,
        "stop_below_1": stop_below_1,
        "stop_dc_1": restricted(dc, False, 1, stop_below_1),
        "stop_dc_2": restricted(dc, False, 1, stop_below_2),
        "stop_d2c_1": shifted(stop_kink),
    }
    return CutoffCandidates(by_heuristic=out)
