from __future__ import annotations

from typing import Callable, Dict, Optional

import numpy as np
import pytest

from src.core.layout import BiosignalGroup, BiosignalLayout, Condition, RawGesture


@pytest.fixture
def small_layout() -> BiosignalLayout:
    """Two groups at different rates, c = 7."""
    return BiosignalLayout(
        groups=(
            BiosignalGroup("emg", 3, 200.0),
            BiosignalGroup("imu", 4, 50.0),
        )
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def make_gesture(rng) -> Callable[..., RawGesture]:
    """Random gesture with every group at the given length (default 40 samples)."""

    def _make(
        layout: BiosignalLayout,
        label: str = "move",
        participant: str = "P001",
        condition: Condition = Condition.PERSONALIZED,
        trial: int = 0,
        lengths: Optional[Dict[str, int]] = None,
        generator: Optional[np.random.Generator] = None,
    ) -> RawGesture:
        gen = generator or rng
        lengths = lengths or {}
        signals = {
            g.name: gen.normal(size=(g.channel_count, lengths.get(g.name, 40)))
            for g in layout.groups
        }
        return RawGesture(label=label, participant=participant, condition=condition, trial=trial, signals=signals)

    return _make
