"""Core data model and utilities shared by the engine and the CLI."""

from shared.models.config import ExperimentConfig, SynthConfig
from shared.models.dataset import Dataset, Metadata, SplitPair

__all__ = [
    "Dataset",
    "Metadata",
    "SplitPair",
    "ExperimentConfig",
    "SynthConfig",
]
