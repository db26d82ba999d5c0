from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np
from tqdm import tqdm

from src.core.config import RecognizerConfig
from src.core.layout import BiosignalLayout, LatentTemplate, ProcessedGesture, RawGesture, RecognitionResult
from src.recognizer.pca import compute_pca, project
from src.recognizer.resample import RecognizerError, normalize

logger = logging.getLogger(__name__)

__all__ = [
    "RecognizerError",
    "path_distance",
    "enroll",
    "enroll_processed",
    "check_templates",
    "score",
    "recognize",
    "recognize_processed",
    "distance_table",
]


def path_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """L1 distance between two flattened point paths."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise RecognizerError(f"path length mismatch: {a.size} vs {b.size}")
    return float(np.sum(np.abs(a - b)))


def enroll_processed(processed: ProcessedGesture, label: str, config: RecognizerConfig) -> LatentTemplate:
    pca = compute_pca(processed, config.n_pc)
    return LatentTemplate(
        label=label,
        components=pca.components,
        points=pca.latent_points,
        n=processed.n,
        n_pc=config.n_pc,
    )


def enroll(gesture: RawGesture, layout: BiosignalLayout, config: RecognizerConfig) -> LatentTemplate:
    """Resample, normalize and decompose one gesture into a stored template."""
    if config.n_pc > layout.total_channels:
        raise RecognizerError(f"nPC ({config.n_pc}) exceeds the number of channels ({layout.total_channels})")
    return enroll_processed(normalize(gesture, layout, config), gesture.label, config)


def check_templates(templates: Sequence[LatentTemplate], channels: int, config: RecognizerConfig) -> None:
    if not templates:
        raise RecognizerError("no templates")
    for i, t in enumerate(templates):
        if t.n != config.n or t.n_pc != config.n_pc:
            raise RecognizerError(
                f"template {i} ({t.label!r}) was enrolled with n={t.n}, nPC={t.n_pc}; "
                f"recognizer expects n={config.n}, nPC={config.n_pc}"
            )
        if t.components.shape != (channels, config.n_pc) or t.points.size != config.n * config.n_pc:
            raise RecognizerError(f"template {i} ({t.label!r}) does not match a {channels}-channel layout")


def score(processed: ProcessedGesture, templates: Sequence[LatentTemplate]) -> np.ndarray:
    """Distance of the candidate to each template, in that template's own latent space."""
    return np.array([path_distance(project(processed.data, t.components), t.points) for t in templates])


def recognize_processed(processed: ProcessedGesture, templates: Sequence[LatentTemplate]) -> RecognitionResult:
    distances = score(processed, templates)
    best = int(np.argmin(distances))  # first minimum wins
    return RecognitionResult(
        matched_label=templates[best].label,
        matched_template_index=best,
        distance=float(distances[best]),
        all_distances=tuple(float(d) for d in distances),
    )


def recognize(
    candidate: RawGesture,
    templates: Sequence[LatentTemplate],
    layout: BiosignalLayout,
    config: RecognizerConfig,
) -> RecognitionResult:
    """
    The candidate is resampled and normalized once, then projected
    into every template's latent space and scored by L1 path distance.
    """
    check_templates(templates, layout.total_channels, config)
    return recognize_processed(normalize(candidate, layout, config), templates)


def distance_table(
    candidates: Sequence[ProcessedGesture],
    templates: Sequence[LatentTemplate],
    progress: bool = False,
) -> np.ndarray:
    """
    table[i, j] = latent L1 distance of candidate i under template j. Each
    column is computed in one batched matmul over all candidates.
    """
    if not candidates or not templates:
        return np.zeros((len(candidates), len(templates)))
    stacked = np.stack([c.data.T for c in candidates])  # (N, n, c)
    table = np.empty((len(candidates), len(templates)))
    cols: List[int] = list(range(len(templates)))
    for j in tqdm(cols, desc="Distance table", disable=None if progress else True):
        t = templates[j]
        latent = np.matmul(stacked, t.components).reshape(len(candidates), -1)
        table[:, j] = np.abs(latent - t.points).sum(axis=1)
    return table
