from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import RecognizerConfig
from src.core.dataset import Dataset
from src.core.layout import BiosignalLayout, Condition, LatentTemplate, RawGesture, default_layout
from src.recognizer.matching import enroll, recognize
from src.synthgen.generator import SynthSpec, generate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchResult:
    mean_ms: float
    sd_ms: float
    cold_ms: float
    runs: int
    warmup: int
    template_count: int
    channels: int
    source: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean_ms": self.mean_ms,
            "sd_ms": self.sd_ms,
            "cold_ms": self.cold_ms,
            "runs": self.runs,
            "warmup": self.warmup,
            "template_count": self.template_count,
            "channels": self.channels,
            "source": self.source,
        }


def _synthetic_workload(
    layout: BiosignalLayout, template_count: int, seed: int
) -> Tuple[List[RawGesture], List[RawGesture]]:
    spec = SynthSpec(
        seed=seed,
        classes=template_count,
        trials_per_class=2,
        layout=layout,
        active_channels_per_class=min(12, layout.total_channels),
        participants=1,
        standardized_trials=0,
        variation_trials=0,
    )
    corpus = generate(spec)
    firsts = [g for g in corpus.gestures if g.trial == 0]
    seconds = [g for g in corpus.gestures if g.trial == 1]
    return firsts, seconds


def _dataset_workload(dataset: Dataset, template_count: int) -> Tuple[List[RawGesture], List[RawGesture]]:
    """One participant's personalized gestures: the first `template_count` enrolled, the rest recognized."""
    personal = [g for g in dataset.gestures if g.condition is Condition.PERSONALIZED]
    if not personal:
        raise ValueError("dataset has no personalized gestures to benchmark")
    participant = sorted({g.participant for g in personal})[0]
    mine = [g for g in personal if g.participant == participant]
    if len(mine) < template_count + 1:
        raise ValueError(
            f"participant {participant} has {len(mine)} personalized gesture(s), need {template_count + 1}"
        )
    return mine[:template_count], mine[template_count:]


def _time_once(candidate: RawGesture, templates: Sequence[LatentTemplate], layout: BiosignalLayout, config: RecognizerConfig) -> float:
    t0 = time.perf_counter()
    recognize(candidate, templates, layout, config)
    return (time.perf_counter() - t0) * 1000.0


def bench_recognition(
    layout: Optional[BiosignalLayout] = None,
    config: RecognizerConfig = RecognizerConfig(),
    template_count: int = 9,
    runs: int = 100,
    warmup: int = 5,
    seed: int = 0,
    dataset: Optional[Dataset] = None,
) -> BenchResult:
    """
    Wall-clock of `recognize` against pre-enrolled templates. Enrollment and
    any I/O are outside the timed region; candidate resampling, normalization
    and every per-template projection are inside. The very first call is
    reported as `cold_ms`; `warmup` further untimed calls precede the
    `runs` timed ones.
    """
    if template_count < 1:
        raise ValueError(f"template_count must be >= 1, got {template_count}")
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")

    if dataset is not None:
        layout = dataset.layout
        template_src, candidates = _dataset_workload(dataset, template_count)
        source = "dataset"
    else:
        layout = layout or default_layout()
        template_src, candidates = _synthetic_workload(layout, template_count, seed)
        source = "synthetic"

    templates = [enroll(g, layout, config) for g in template_src]

    cold_ms = _time_once(candidates[0], templates, layout, config)
    for i in range(max(0, warmup)):
        recognize(candidates[i % len(candidates)], templates, layout, config)

    samples = np.array([_time_once(candidates[i % len(candidates)], templates, layout, config) for i in range(runs)])
    result = BenchResult(
        mean_ms=float(samples.mean()),
        sd_ms=float(samples.std(ddof=1)) if runs > 1 else 0.0,
        cold_ms=cold_ms,
        runs=runs,
        warmup=max(0, warmup),
        template_count=template_count,
        channels=layout.total_channels,
        source=source,
    )
    logger.info(
        "recognize with %d template(s), c=%d: %.2f ms (SD %.2f) over %d runs, cold %.2f ms",
        template_count, layout.total_channels, result.mean_ms, result.sd_ms, runs, cold_ms,
    )
    return result
