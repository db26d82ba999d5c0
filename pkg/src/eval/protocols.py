from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.core.config import RecognizerConfig
from src.core.dataset import Dataset
from src.core.layout import VARIATION_KINDS, BiosignalLayout, Condition, LatentTemplate, RawGesture
from src.eval.report import CellResult, EvaluationReport, TimingSummary
from src.recognizer.matching import RecognizerError, distance_table, enroll_processed, recognize
from src.recognizer.resample import normalize

logger = logging.getLogger(__name__)

# label -> gesture indices (dataset order)
Pool = Dict[str, List[int]]


class InsufficientSamplesError(ValueError):
    pass


class Protocol(str, Enum):
    USER_DEPENDENT = "user_dependent"
    ARTICULATION_VARIABILITY = "articulation_variability"
    USER_INDEPENDENT = "user_independent"

    @classmethod
    def parse(cls, name: str) -> "Protocol":
        aliases = {"ud": cls.USER_DEPENDENT, "var": cls.ARTICULATION_VARIABILITY, "ui": cls.USER_INDEPENDENT}
        key = str(name).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)

    def default_T(self) -> Tuple[int, ...]:
        if self is Protocol.USER_INDEPENDENT:
            return (1, 3, 7)
        return tuple(range(1, 10))


_PROTOCOL_CODES = {Protocol.USER_DEPENDENT: 1, Protocol.ARTICULATION_VARIABILITY: 2, Protocol.USER_INDEPENDENT: 3}


@dataclass(frozen=True)
class EvalConfig:
    protocol: Protocol
    templates_T: Tuple[int, ...] = ()
    repetitions: int = 100
    seed: int = 0
    recognizer: RecognizerConfig = field(default_factory=RecognizerConfig)
    measure_timing: bool = False

    def __post_init__(self):
        protocol = self.protocol if isinstance(self.protocol, Protocol) else Protocol.parse(self.protocol)
        object.__setattr__(self, "protocol", protocol)
        ts = tuple(int(t) for t in self.templates_T) or protocol.default_T()
        if any(t < 1 for t in ts):
            raise ValueError(f"every T must be >= 1, got {list(ts)}")
        object.__setattr__(self, "templates_T", ts)
        if int(self.repetitions) < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "protocol": self.protocol.value,
            "templates_T": list(self.templates_T),
            "repetitions": int(self.repetitions),
            "seed": int(self.seed),
            "recognizer": {"n": self.recognizer.n, "nPC": self.recognizer.n_pc},
            "measure_timing": bool(self.measure_timing),
        }


def sampling_rng(seed: int, protocol: Protocol, participant_idx: int, T: int, rep: int) -> np.random.Generator:
    """One stream per (protocol, participant, T, repetition)."""
    key = (_PROTOCOL_CODES[protocol], int(participant_idx), int(T), int(rep))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


@dataclass(frozen=True)
class Split:
    templates: Tuple[int, ...]
    candidates: Tuple[int, ...]


def draw_split(pool: Mapping[str, Sequence[int]], T: int, rng: np.random.Generator, candidates_per_class: int = 1) -> Split:
    """
    For every class (sorted by label) draw T templates and `candidates_per_class`
    candidates together, uniformly without replacement. Templates come back
    ordered by class label, then draw order.
    """
    templates: List[int] = []
    candidates: List[int] = []
    need = T + candidates_per_class
    for label in sorted(pool):
        idx = list(pool[label])
        if len(idx) < need:
            raise InsufficientSamplesError(f"class {label!r} has {len(idx)} sample(s), need {need}")
        picked = rng.choice(len(idx), size=need, replace=False)
        templates.extend(idx[int(i)] for i in picked[:T])
        candidates.extend(idx[int(i)] for i in picked[T:])
    return Split(templates=tuple(templates), candidates=tuple(candidates))


def pools_by_participant(gestures: Sequence[RawGesture], condition: Condition) -> Dict[str, Pool]:
    out: Dict[str, Pool] = defaultdict(lambda: defaultdict(list))
    for i, g in enumerate(gestures):
        if g.condition is condition:
            out[g.participant][g.label].append(i)
    return {p: dict(pool) for p, pool in out.items()}


def _check_pools(pools: Mapping[str, Pool], need: int, what: str) -> None:
    for participant in sorted(pools):
        for label, idx in sorted(pools[participant].items()):
            if len(idx) < need:
                raise InsufficientSamplesError(
                    f"participant {participant} has {len(idx)} {what} sample(s) of {label!r}, need {need}"
                )


class _Scorer:
    """Enrolls every template gesture once and scores all candidates against all of them up front."""

    def __init__(
        self,
        layout: BiosignalLayout,
        gestures: Sequence[RawGesture],
        config: RecognizerConfig,
        candidate_ids: Sequence[int],
        template_ids: Sequence[int],
        progress: bool = False,
    ):
        if config.n_pc > layout.total_channels:
            raise RecognizerError(f"nPC ({config.n_pc}) exceeds the number of channels ({layout.total_channels})")
        self.layout = layout
        self.gestures = gestures
        self.config = config
        self._cpos = {g: i for i, g in enumerate(candidate_ids)}
        self._tpos = {g: i for i, g in enumerate(template_ids)}
        processed = {i: normalize(gestures[i], layout, config) for i in set(candidate_ids) | set(template_ids)}
        self.templates: Dict[int, LatentTemplate] = {
            i: enroll_processed(processed[i], gestures[i].label, config) for i in template_ids
        }
        self.table = distance_table(
            [processed[i] for i in candidate_ids],
            [self.templates[i] for i in template_ids],
            progress=progress,
        )

    def predict(self, candidate: int, template_ids: Sequence[int]) -> str:
        row = self.table[self._cpos[candidate], [self._tpos[t] for t in template_ids]]
        return self.gestures[template_ids[int(np.argmin(row))]].label

    def time_recognize(self, candidates: Sequence[int], template_ids: Sequence[int]) -> List[float]:
        """Wall-clock of the full recognize path (resample, normalize, every projection) per candidate."""
        templates = [self.templates[t] for t in template_ids]
        out = []
        for c in candidates:
            t0 = time.perf_counter()
            recognize(self.gestures[c], templates, self.layout, self.config)
            out.append((time.perf_counter() - t0) * 1000.0)
        return out


def _reps(config: EvalConfig, desc: str, progress: bool):
    return tqdm(range(config.repetitions), desc=desc, leave=False, disable=None if progress else True)


def _expect(config: EvalConfig, protocol: Protocol) -> None:
    if config.protocol is not protocol:
        raise ValueError(f"config is for {config.protocol.value}, expected {protocol.value}")


def _report(config: EvalConfig, cells: List[CellResult], timings: List[float]) -> EvaluationReport:
    timing = TimingSummary.from_samples(timings) if config.measure_timing else None
    return EvaluationReport(
        protocol=config.protocol.value,
        seed=int(config.seed),
        config=config.to_dict(),
        cells=tuple(cells),
        timing=timing,
    )


def run_user_dependent(dataset: Dataset, config: EvalConfig, progress: bool = False) -> EvaluationReport:
    """
    Per participant and repetition: for every class, T templates and one
    disjoint candidate from the personalized condition.
    """
    _expect(config, Protocol.USER_DEPENDENT)
    gestures = dataset.gestures
    pools = pools_by_participant(gestures, Condition.PERSONALIZED)
    if not pools:
        raise InsufficientSamplesError("dataset has no personalized gestures")
    _check_pools(pools, max(config.templates_T) + 1, "personalized")

    cells: List[CellResult] = []
    timings: List[float] = []
    for p_idx, participant in enumerate(sorted(pools)):
        pool = pools[participant]
        ids = [i for label in sorted(pool) for i in pool[label]]
        scorer = _Scorer(dataset.layout, gestures, config.recognizer, ids, ids, progress)
        for T in config.templates_T:
            errors = trials = 0
            for rep in _reps(config, f"{participant} T={T}", progress):
                split = draw_split(pool, T, sampling_rng(config.seed, config.protocol, p_idx, T, rep))
                for c in split.candidates:
                    trials += 1
                    errors += scorer.predict(c, split.templates) != gestures[c].label
                if config.measure_timing and rep == 0:
                    timings.extend(scorer.time_recognize(split.candidates, split.templates))
            cells.append(CellResult(participant=participant, T=T, cell="all", errors=errors, trials=trials))
            logger.debug("%s T=%d: %d/%d errors", participant, T, errors, trials)

    return _report(config, cells, timings)


def run_articulation_variability(dataset: Dataset, config: EvalConfig, progress: bool = False) -> EvaluationReport:
    """
    Templates as in the user-dependent protocol; candidates come from each
    variation condition (one per probed class and kind). Cells are per kind.
    """
    _expect(config, Protocol.ARTICULATION_VARIABILITY)
    gestures = dataset.gestures
    personal = pools_by_participant(gestures, Condition.PERSONALIZED)
    variations = {kind: pools_by_participant(gestures, Condition.variation(kind)) for kind in VARIATION_KINDS}

    participants = sorted(p for p in personal if any(p in variations[k] for k in VARIATION_KINDS))
    if not participants:
        raise InsufficientSamplesError("dataset has no participant with both personalized and variation gestures")
    for p in participants:
        missing = [k for k in VARIATION_KINDS if p not in variations[k]]
        if missing:
            raise InsufficientSamplesError(f"participant {p} has no {', '.join(missing)} variation samples")
    _check_pools({p: personal[p] for p in participants}, max(config.templates_T), "personalized")

    cells: List[CellResult] = []
    timings: List[float] = []
    for p_idx, participant in enumerate(participants):
        pool = personal[participant]
        template_ids = [i for label in sorted(pool) for i in pool[label]]
        candidate_ids = [
            i for kind in VARIATION_KINDS
            for label in sorted(variations[kind][participant])
            for i in variations[kind][participant][label]
        ]
        scorer = _Scorer(dataset.layout, gestures, config.recognizer, candidate_ids, template_ids, progress)
        for T in config.templates_T:
            errors = {k: 0 for k in VARIATION_KINDS}
            trials = {k: 0 for k in VARIATION_KINDS}
            for rep in _reps(config, f"{participant} T={T}", progress):
                rng = sampling_rng(config.seed, config.protocol, p_idx, T, rep)
                split = draw_split(pool, T, rng, candidates_per_class=0)
                drawn: List[int] = []
                for kind in VARIATION_KINDS:
                    var_pool = variations[kind][participant]
                    for label in sorted(var_pool):
                        c = var_pool[label][int(rng.integers(len(var_pool[label])))]
                        drawn.append(c)
                        trials[kind] += 1
                        errors[kind] += scorer.predict(c, split.templates) != gestures[c].label
                if config.measure_timing and rep == 0:
                    timings.extend(scorer.time_recognize(drawn, split.templates))
            for kind in VARIATION_KINDS:
                cells.append(CellResult(participant=participant, T=T, cell=kind, errors=errors[kind], trials=trials[kind]))

    return _report(config, cells, timings)


def run_user_independent(dataset: Dataset, config: EvalConfig, progress: bool = False) -> EvaluationReport:
    """
    Leave one participant out: T standardized samples per class from every
    other participant are the templates, one standardized sample per class
    of the held-out participant is the candidate.
    """
    _expect(config, Protocol.USER_INDEPENDENT)
    gestures = dataset.gestures
    pools = pools_by_participant(gestures, Condition.STANDARDIZED)
    if len(pools) < 2:
        raise InsufficientSamplesError(
            f"user-independent evaluation needs >= 2 participants with standardized samples, got {len(pools)}"
        )
    _check_pools(pools, max(config.templates_T), "standardized")

    participants = sorted(pools)
    ids = [i for p in participants for label in sorted(pools[p]) for i in pools[p][label]]
    scorer = _Scorer(dataset.layout, gestures, config.recognizer, ids, ids, progress)

    cells: List[CellResult] = []
    timings: List[float] = []
    for p_idx, held_out in enumerate(participants):
        training = [p for p in participants if p != held_out]
        for T in config.templates_T:
            errors = trials = 0
            for rep in _reps(config, f"hold out {held_out} T={T}", progress):
                rng = sampling_rng(config.seed, config.protocol, p_idx, T, rep)
                drawn: List[int] = []
                for p in training:
                    drawn.extend(draw_split(pools[p], T, rng, candidates_per_class=0).templates)
                # class label first, then draw order
                templates = sorted(drawn, key=lambda i: gestures[i].label)
                candidates = []
                for label in sorted(pools[held_out]):
                    idx = pools[held_out][label]
                    candidates.append(idx[int(rng.integers(len(idx)))])
                for c in candidates:
                    trials += 1
                    errors += scorer.predict(c, templates) != gestures[c].label
                if config.measure_timing and rep == 0:
                    timings.extend(scorer.time_recognize(candidates, templates))
            cells.append(CellResult(participant=held_out, T=T, cell="all", errors=errors, trials=trials))

    return _report(config, cells, timings)


_RUNNERS = {
    Protocol.USER_DEPENDENT: run_user_dependent,
    Protocol.ARTICULATION_VARIABILITY: run_articulation_variability,
    Protocol.USER_INDEPENDENT: run_user_independent,
}


def run_protocol(dataset: Dataset, config: EvalConfig, progress: bool = False) -> EvaluationReport:
    report = _RUNNERS[config.protocol](dataset, config, progress=progress)
    logger.info("Finished %s evaluation: %d cell(s)", config.protocol.value, len(report.cells))
    return report
