"""Experiment results: repeat-level accuracies and their per-point summaries."""

from __future__ import annotations

import math
from collections.abc import Iterable
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from lab.models.audit import AuditLog
from shared.errors import ConfigError, InsufficientDataError

Condition = Literal["leaky", "clean"]
CONDITIONS: tuple[Condition, ...] = ("leaky", "clean")


def aggregate(values: Iterable[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (n - 1 denominator; 0 for one value).

    Raises:
        InsufficientDataError: When ``values`` is empty.
    """
    arr = np.fromiter(values, dtype=np.float64)
    if arr.size == 0:
        raise InsufficientDataError("cannot aggregate an empty list of values")
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


class RawResult(BaseModel):
    """Accuracy of one execution."""

    experiment: str
    param: float
    condition: Condition
    repeat: int = Field(..., ge=0)
    fold: int = Field(..., ge=0)
    accuracy: float = Field(..., ge=0.0, le=1.0)


class TrendPoint(BaseModel):
    param: float
    condition: Condition
    mean: float = Field(..., ge=0.0, le=1.0)
    std: float = Field(..., ge=0.0)
    count: int = Field(..., ge=1)


class TrendSeries(BaseModel):
    """All repeat-level results of one experiment, in sweep/condition/repeat/fold order."""

    experiment: str
    sweep: list[float]
    repeats: int = Field(..., ge=1)
    folds: int = Field(..., ge=1)
    raw: list[RawResult] = Field(default_factory=list)
    audits: list[AuditLog] = Field(default_factory=list, exclude=True)

    def values(self, param: float, condition: Condition) -> list[float]:
        return [
            r.accuracy
            for r in self.raw
            if r.condition == condition and math.isclose(r.param, param)
        ]

    def point(self, param: float, condition: Condition) -> TrendPoint:
        values = self.values(param, condition)
        if not values:
            raise ConfigError(f"no {condition} results at {param}")
        mean, std = aggregate(values)
        return TrendPoint(param=param, condition=condition, mean=mean, std=std, count=len(values))

    def points(self) -> list[TrendPoint]:
        return [self.point(p, c) for p in self.sweep for c in CONDITIONS]

    def means(self, condition: Condition) -> list[float]:
        return [self.point(p, condition).mean for p in self.sweep]

    def stds(self, condition: Condition) -> list[float]:
        return [self.point(p, condition).std for p in self.sweep]

    def gap(self, param: float) -> float:
        """Leaky mean minus clean mean at ``param``."""
        return self.point(param, "leaky").mean - self.point(param, "clean").mean

    def pooled_std(self, param: float) -> float:
        leaky, clean = self.point(param, "leaky"), self.point(param, "clean")
        return math.sqrt((leaky.std**2 + clean.std**2) / 2.0)

    def expected_count(self) -> int:
        """Raw results per (param, condition)."""
        return self.repeats * self.folds
