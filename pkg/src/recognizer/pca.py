from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from src.core.layout import ProcessedGesture
from src.recognizer.resample import RecognizerError

logger = logging.getLogger(__name__)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@lru_cache(maxsize=32)
def _rotation_schedule(size: int) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    """
    Round-robin pairing: every (p, q) pair appears exactly once per sweep and
    the pairs inside one round are disjoint.
    """
    m = size + (size % 2)
    players: List[int] = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < size and b < size]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.asarray(p, dtype=np.intp), np.asarray(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(0.0, np.sum(a * a) - np.sum(np.diag(a) ** 2))))


def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """
    Eigen-decomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Each round applies a batch of disjoint plane rotations as one orthogonal
    similarity. Sweeps stop once the off-diagonal Frobenius norm is at most
    `tol` times the Frobenius norm of the input.

    Returns (eigenvalues, eigenvectors as columns, sweeps used), unsorted.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise RecognizerError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12):
        raise RecognizerError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    size = a.shape[0]
    v = np.eye(size)
    limit = tol * float(np.linalg.norm(a))

    sweeps = 0
    while off_diagonal_norm(a) > limit:
        if sweeps >= max_sweeps:
            logger.warning(
                "Jacobi did not converge in %d sweeps (off-diagonal %.3e, limit %.3e)",
                max_sweeps, off_diagonal_norm(a), limit,
            )
            break
        for p, q in _rotation_schedule(size):
            apq = a[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            app = a[p, p]
            aqq = a[q, q]
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                theta = np.where(active, (aqq - app) / np.where(active, 2.0 * apq, 1.0), 0.0)
                t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(active & np.isfinite(t), t, 0.0)
            cos = 1.0 / np.sqrt(t * t + 1.0)
            sin = t * cos

            rot = np.eye(size)
            rot[p, p] = cos
            rot[q, q] = cos
            rot[p, q] = sin
            rot[q, p] = -sin

            a = rot.T @ a @ rot
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ rot
        a = 0.5 * (a + a.T)
        sweeps += 1

    return np.diag(a).copy(), v, sweeps


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive (first such entry on ties)."""
    out = np.array(vectors, dtype=np.float64)
    pivots = np.argmax(np.abs(out), axis=0)
    signs = np.where(out[pivots, np.arange(out.shape[1])] < 0.0, -1.0, 1.0)
    return out * signs


def project(data: np.ndarray, components: np.ndarray) -> np.ndarray:
    """flatten(D^T U), time-major: all components of time 0, then time 1, ..."""
    return (np.asarray(data).T @ np.asarray(components)).ravel()


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray
    latent_points: np.ndarray
    eigenvalues: np.ndarray
    covariance: np.ndarray


def covariance(data: np.ndarray) -> np.ndarray:
    d = np.asarray(data, dtype=np.float64)
    return d @ d.T / (d.shape[1] - 1)


def compute_pca(processed: ProcessedGesture, n_pc: int) -> PcaResult:
    """
    cov = D D^T / (n - 1), eigenvectors by descending eigenvalue
    (stable on ties), the first n_pc kept as U, and the template's latent
    points flatten(D^T U).
    """
    d = processed.data
    c = d.shape[0]
    if n_pc > c:
        raise RecognizerError(f"nPC ({n_pc}) exceeds the number of channels ({c})")
    if n_pc < 1:
        raise RecognizerError(f"nPC must be >= 1, got {n_pc}")

    cov = covariance(d)
    eigenvalues, eigenvectors, sweeps = jacobi_eigh(cov)
    logger.debug("Jacobi converged in %d sweeps for c=%d", sweeps, c)

    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    components = fix_signs(eigenvectors[:, order[:n_pc]])
    return PcaResult(
        components=components,
        latent_points=project(d, components),
        eigenvalues=eigenvalues,
        covariance=cov,
    )
