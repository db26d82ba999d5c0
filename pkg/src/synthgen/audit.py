from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import faiss
import numpy as np

from src.core.config import RecognizerConfig
from src.core.layout import BiosignalLayout, RawGesture
from src.recognizer.resample import normalize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuditResult:
    max_within: float
    min_between: float
    violations: int
    gestures: int

    @property
    def separable(self) -> bool:
        return self.max_within < self.min_between

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_within": self.max_within,
            "min_between": self.min_between,
            "violations": self.violations,
            "gestures": self.gestures,
            "separable": self.separable,
        }


def build_l2_index(vectors: np.ndarray) -> faiss.Index:
    """Exact (flat) L2 index; faiss reports squared distances."""
    if vectors.dtype != np.float32:
        vectors = vectors.astype(np.float32)
    index = faiss.IndexFlatL2(vectors.shape[1])
    index.add(np.ascontiguousarray(vectors))
    return index


def separability_audit(
    layout: BiosignalLayout,
    gestures: Sequence[RawGesture],
    config: RecognizerConfig = RecognizerConfig(),
) -> AuditResult:
    """
    Brute-force pairwise L2 over flattened normalized gestures.

    `violations` counts gestures whose nearest other-class neighbour is closer
    than their farthest same-class neighbour. The corpus is separable when
    every within-class pair is closer than every between-class pair.
    """
    if len(gestures) < 2:
        return AuditResult(max_within=0.0, min_between=float("inf"), violations=0, gestures=len(gestures))

    vectors = np.stack([normalize(g, layout, config).data.ravel() for g in gestures])
    labels = np.array([g.label for g in gestures])
    index = build_l2_index(vectors)
    sq_dist, ids = index.search(np.ascontiguousarray(vectors.astype(np.float32)), len(gestures))
    dist = np.sqrt(np.maximum(sq_dist, 0.0))

    max_within = 0.0
    min_between = float("inf")
    violations = 0
    for i in range(len(gestures)):
        others = ids[i] != i
        same = others & (labels[ids[i]] == labels[i])
        diff = labels[ids[i]] != labels[i]
        row_within = float(dist[i][same].max()) if same.any() else 0.0
        row_between = float(dist[i][diff].min()) if diff.any() else float("inf")
        max_within = max(max_within, row_within)
        min_between = min(min_between, row_between)
        if row_between <= row_within:
            violations += 1

    result = AuditResult(max_within=max_within, min_between=min_between, violations=violations, gestures=len(gestures))
    logger.info(
        "Separability audit: max within %.4f, min between %.4f, %d violation(s)",
        max_within, min_between, violations,
    )
    return result
