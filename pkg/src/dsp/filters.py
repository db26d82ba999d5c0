from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import signal


class FilterDesignError(ValueError):
    pass


FILTER_KINDS = ("lowpass", "highpass")
SUPPORTED_ORDERS = (2, 4, 6, 8)


@dataclass(frozen=True)
class Biquad:
    b0: float
    b1: float
    b2: float
    a1: float
    a2: float


@dataclass(frozen=True)
class BiquadCascade:
    """
    Second-order sections in scipy's layout: one row [b0, b1, b2, 1, a1, a2]
    per section, applied in order.
    """
    sos: np.ndarray
    kind: str
    cutoff_hz: float
    order: int
    sample_rate_hz: float

    def __post_init__(self):
        sos = np.array(self.sos, dtype=np.float64)
        sos.setflags(write=False)
        object.__setattr__(self, "sos", sos)
        if sos.shape != (self.order // 2, 6):
            raise FilterDesignError(f"expected {self.order // 2} sections, got shape {sos.shape}")
        for i, radius in enumerate(self.pole_radii()):
            if radius >= 1.0:
                raise FilterDesignError(f"section {i} is unstable (pole radius {radius:.12f})")

    @property
    def sections(self) -> List[Biquad]:
        return [Biquad(b0=r[0], b1=r[1], b2=r[2], a1=r[4], a2=r[5]) for r in self.sos]

    def pole_radii(self) -> np.ndarray:
        radii = [np.abs(np.roots([1.0, r[4], r[5]])).max() for r in self.sos]
        return np.asarray(radii)


def design_butterworth(kind: str, order: int, cutoff_hz: float, sample_rate_hz: float) -> BiquadCascade:
    """
    Digital Butterworth filter via the bilinear transform with frequency
    pre-warping, as a cascade of order/2 biquads.
    """
    if kind not in FILTER_KINDS:
        raise FilterDesignError(f"unknown filter kind {kind!r} (expected one of {FILTER_KINDS})")
    if order % 2 != 0:
        raise FilterDesignError(f"filter order must be even, got {order}")
    if order not in SUPPORTED_ORDERS:
        raise FilterDesignError(f"filter order must be one of {SUPPORTED_ORDERS}, got {order}")
    nyquist = sample_rate_hz / 2.0
    if not 0.0 < cutoff_hz < nyquist:
        raise FilterDesignError(
            f"cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({nyquist} Hz)"
        )

    sos = signal.butter(order, cutoff_hz, btype=kind, fs=sample_rate_hz, output="sos")
    return BiquadCascade(
        sos=sos,
        kind=kind,
        cutoff_hz=float(cutoff_hz),
        order=int(order),
        sample_rate_hz=float(sample_rate_hz),
    )


def filter_forward(cascade: BiquadCascade, x: Sequence[float]) -> np.ndarray:
    """Causal direct-form-II-transposed evaluation from zero initial state."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return np.zeros(0, dtype=np.float64)
    return signal.sosfilt(np.array(cascade.sos), x)


def magnitude_response(cascade: BiquadCascade, freqs_hz: Sequence[float]) -> np.ndarray:
    freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
    _, h = signal.sosfreqz(cascade.sos, worN=freqs, fs=cascade.sample_rate_hz)
    return np.abs(h)


def attenuation_db(cascade: BiquadCascade, stop_hz: float, pass_hz: float) -> float:
    """Gain difference in dB between a passband and a stopband frequency."""
    mag = magnitude_response(cascade, [stop_hz, pass_hz])
    return float(20.0 * np.log10(mag[1] / mag[0]))


def impulse_response(cascade: BiquadCascade, length: int) -> np.ndarray:
    impulse = np.zeros(length)
    impulse[0] = 1.0
    return filter_forward(cascade, impulse)


def envelope_filters(sample_rate_hz: float, cutoff_hz: float = 40.0, order: int = 4) -> Tuple[BiquadCascade, BiquadCascade]:
    """The highpass/lowpass pair of the EMG linear envelope."""
    return (
        design_butterworth("highpass", order, cutoff_hz, sample_rate_hz),
        design_butterworth("lowpass", order, cutoff_hz, sample_rate_hz),
    )
