"""Blob separation calibration.

Finds a class separation for which the clean k-fold accuracy of the MLP lands
inside a target band, so leak effects have room on both sides.
"""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, Field

from lab.models.plan import (
    EvaluateStep,
    PipelinePlan,
    PreprocessStep,
    ScopePolicy,
    SplitStep,
    TrainStep,
)
from lab.pipeline import execute
from lab.seeding import derive_seed
from lab.split import kfold_stratified
from lab.synth import gen_blobs
from shared.errors import ConfigError
from shared.models.config import BlobConfig, TrainConfig

logger = logging.getLogger(__name__)

UPPER_SEPARATION = 4.0


class CalibrationResult(BaseModel):
    separation: float = Field(..., ge=0.0)
    accuracy: float = Field(..., ge=0.0, le=1.0)
    iterations: int = Field(..., ge=1)
    converged: bool = Field(description="True when accuracy landed inside the target band")
    history: list[tuple[float, float]] = Field(
        default_factory=list, description="(separation, accuracy) per probe"
    )


def clean_cv_accuracy(blob: BlobConfig, train: TrainConfig, folds: int = 5) -> float:
    """Mean clean k-fold accuracy of a pinned-standardize pipeline on ``gen_blobs(blob)``."""
    ds = gen_blobs(blob)
    scores = []
    for fold, pair in enumerate(kfold_stratified(ds, folds, derive_seed(blob.seed, 1)).pairs()):
        plan = PipelinePlan(
            (
                SplitStep(strategy="fixed", pair=pair),
                PreprocessStep("standardize", pinned=True),
                TrainStep(config=train),
                EvaluateStep(),
            )
        )
        scores.append(execute(plan, ds, ScopePolicy(), derive_seed(blob.seed, 2, fold)).accuracy)
    return float(np.mean(scores))


def calibrate_separation(
    blob: BlobConfig,
    train: TrainConfig,
    target: tuple[float, float] = (0.80, 0.93),
    folds: int = 5,
    max_iter: int = 12,
) -> CalibrationResult:
    """Bisect ``blob.separation`` in ``[0, 4]`` until clean accuracy falls inside ``target``.

    Raises:
        ConfigError: On an empty or inverted target band.
    """
    low_target, high_target = target
    if not 0.5 <= low_target < high_target <= 1.0:
        raise ConfigError(f"target band must satisfy 0.5 <= low < high <= 1, got {target}")
    if max_iter < 1:
        raise ConfigError(f"max_iter must be at least 1, got {max_iter}")

    low, high = 0.0, UPPER_SEPARATION
    history: list[tuple[float, float]] = []
    separation = accuracy = 0.0
    for _ in range(max_iter):
        separation = (low + high) / 2.0
        probe = blob.model_copy(update={"separation": separation})
        accuracy = clean_cv_accuracy(probe, train, folds)
        history.append((separation, accuracy))
        logger.info(f"Calibration probe separation={separation:.4f} accuracy={accuracy:.4f}")
        if accuracy < low_target:
            low = separation
        elif accuracy > high_target:
            high = separation
        else:
            break
    converged = low_target <= accuracy <= high_target
    if not converged:
        logger.warning(f"Calibration stopped after {max_iter} probes outside the target band")
    return CalibrationResult(
        separation=separation,
        accuracy=accuracy,
        iterations=len(history),
        converged=converged,
        history=history,
    )
