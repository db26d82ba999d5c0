from __future__ import annotations

from typing import Sequence

import numpy as np

from src.core.config import RecognizerConfig
from src.core.layout import BiosignalLayout, ProcessedGesture, RawGesture


class RecognizerError(ValueError):
    pass


# Groups whose std falls below this fraction of their largest raw magnitude
# are numerically constant and are left at zero.
FLAT_GROUP_RTOL = 1e-12


def resample_channel(points: Sequence[float], n: int) -> np.ndarray:
    """
    Piecewise-linear resampling of N points onto n evenly spaced time points
    spanning the same interval. Endpoints are copied exactly.
    """
    p = np.asarray(points, dtype=np.float64)
    big_n = p.size
    if big_n < 2:
        raise RecognizerError(f"need at least 2 points to resample, got {big_n}")
    if n < 2:
        raise RecognizerError(f"n must be >= 2, got {n}")

    old_time = np.arange(big_n, dtype=np.float64)
    new_time = np.arange(n, dtype=np.float64) * (big_n - 1) / (n - 1)
    out = np.interp(new_time, old_time, p)
    out[0] = p[0]
    out[-1] = p[-1]
    return out


def resample_matrix(samples: np.ndarray, n: int) -> np.ndarray:
    return np.vstack([resample_channel(ch, n) for ch in np.atleast_2d(samples)])


def normalize(gesture: RawGesture, layout: BiosignalLayout, config: RecognizerConfig) -> ProcessedGesture:
    """
    Resample every channel to n points, demean each
    channel, then divide each biosignal group by the population standard
    deviation of all its samples jointly. A flat group stays all-zero.
    """
    blocks = []
    for g in layout.groups:
        raw = gesture.samples(g.name)
        block = resample_matrix(raw, config.n)
        block = block - block.mean(axis=1, keepdims=True)
        std = block.std()
        scale = float(np.max(np.abs(raw))) if raw.size else 0.0
        if std <= FLAT_GROUP_RTOL * scale or std == 0.0:
            block = np.zeros_like(block)
        else:
            block = block / std
        blocks.append(block)
    return ProcessedGesture(data=np.vstack(blocks), label=gesture.label)
