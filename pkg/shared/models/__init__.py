"""Shared data models."""

from shared.models.config import (
    BlobConfig,
    CliConfig,
    EarlyStopConfig,
    ExperimentConfig,
    FrankensteinPlan,
    SynthConfig,
    TrainConfig,
)
from shared.models.dataset import ABSENT, Dataset, Metadata, SplitPair
from shared.models.finding import Finding

__all__ = [
    "ABSENT",
    "Dataset",
    "Metadata",
    "SplitPair",
    "BlobConfig",
    "FrankensteinPlan",
    "EarlyStopConfig",
    "TrainConfig",
    "ExperimentConfig",
    "SynthConfig",
    "CliConfig",
    "Finding",
]
