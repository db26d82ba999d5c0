from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["protocol", "participant", "T", "cell", "errors", "trials", "error_rate"]


@dataclass(frozen=True)
class CellResult:
    participant: str
    T: int
    cell: str
    errors: int
    trials: int

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "participant": self.participant,
            "T": self.T,
            "cell": self.cell,
            "errors": self.errors,
            "trials": self.trials,
            "error_rate": self.error_rate,
        }


@dataclass(frozen=True)
class TimingSummary:
    mean_ms: float
    sd_ms: float
    runs: int

    @classmethod
    def from_samples(cls, samples_ms: Sequence[float]) -> Optional["TimingSummary"]:
        if not samples_ms:
            return None
        arr = np.asarray(samples_ms, dtype=np.float64)
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return cls(mean_ms=float(arr.mean()), sd_ms=sd, runs=int(arr.size))

    def to_dict(self) -> Dict[str, Any]:
        return {"mean_ms": self.mean_ms, "sd_ms": self.sd_ms, "runs": self.runs}


def summarize(cells: Sequence[CellResult]) -> List[Dict[str, Any]]:
    """Mean and SD of the per-participant error rates for every (T, cell)."""
    by_key: Dict[Tuple[int, str], List[float]] = defaultdict(list)
    for c in cells:
        by_key[(c.T, c.cell)].append(c.error_rate)
    out = []
    for (t, cell), rates in sorted(by_key.items()):
        arr = np.asarray(rates)
        out.append({
            "T": t,
            "cell": cell,
            "participants": int(arr.size),
            "mean_error_rate": float(arr.mean()),
            "sd_error_rate": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        })
    return out


@dataclass(frozen=True)
class EvaluationReport:
    protocol: str
    seed: int
    config: Dict[str, Any]
    cells: Tuple[CellResult, ...]
    timing: Optional[TimingSummary] = None
    summary: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        if not self.summary:
            object.__setattr__(self, "summary", summarize(self.cells))

    def cell(self, participant: str, T: int, cell: str = "all") -> CellResult:
        for c in self.cells:
            if c.participant == participant and c.T == T and c.cell == cell:
                return c
        raise KeyError((participant, T, cell))

    def overall_error_rate(self, T: int, cell: Optional[str] = None) -> float:
        picked = [c for c in self.cells if c.T == T and (cell is None or c.cell == cell)]
        trials = sum(c.trials for c in picked)
        return sum(c.errors for c in picked) / trials if trials else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "config": self.config,
            "cells": [c.to_dict() for c in self.cells],
            "summary": self.summary,
            "timing": self.timing.to_dict() if self.timing else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def write_report(report: EvaluationReport, path: Union[str, Path]) -> Tuple[Path, Path]:
    """Write `<path>` as JSON and a flat CSV next to it; returns both paths."""
    json_path = Path(path)
    csv_path = json_path.with_suffix(".csv")
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(report.to_json() + "\n", encoding="utf-8")

    with csv_path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for c in report.cells:
            writer.writerow({"protocol": report.protocol, **c.to_dict()})

    logger.info("Wrote %s and %s", json_path, csv_path)
    return json_path, csv_path
