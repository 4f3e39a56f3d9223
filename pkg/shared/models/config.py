"""Configuration models for generators, training, experiments and the CLI."""

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from shared.errors import ConfigError

SEED_MAX = 2**64 - 1

ExperimentKind = Literal[
    "frankenstein",
    "label_delta",
    "smote_overlap",
    "normalization_shift",
    "set_intersection",
    "window_overlap",
    "distribution_shift",
]

EXPERIMENT_KINDS: tuple[str, ...] = (
    "frankenstein",
    "label_delta",
    "smote_overlap",
    "normalization_shift",
    "set_intersection",
    "window_overlap",
    "distribution_shift",
)

# Experiments scored with k-fold cross-validation; the rest use one holdout.
CV_KINDS = frozenset({"frankenstein", "smote_overlap", "normalization_shift", "set_intersection"})


class BlobConfig(BaseModel):
    """Gaussian-blob binary classification generator settings."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(default=1000, ge=2, description="Number of rows")
    d: int = Field(default=20, ge=1, description="Number of feature columns")
    separation: float = Field(
        default=1.2, ge=0.0, description="Distance between class means per informative feature"
    )
    n_informative: int = Field(default=5, ge=1, description="Columns whose mean depends on class")
    minority_fraction: float = Field(
        default=0.5, gt=0.0, lt=1.0, description="Share of rows labelled 1"
    )
    seed: int = Field(default=0, ge=0, le=SEED_MAX, description="Generator seed")

    @model_validator(mode="after")
    def check_shape(self) -> "BlobConfig":
        if self.n_informative > self.d:
            raise ValueError(f"n_informative ({self.n_informative}) must not exceed d ({self.d})")
        ones = self.class_one_count()
        if ones < 1 or ones > self.n - 1:
            raise ValueError(
                f"n={self.n} with minority_fraction={self.minority_fraction} "
                "leaves a class without rows"
            )
        return self

    def class_one_count(self) -> int:
        """Rows labelled 1 (rounded half up)."""
        return int(self.n * self.minority_fraction + 0.5)


class FrankensteinPlan(BaseModel):
    """Staged composition of datasets that silently re-collect earlier rows."""

    model_config = ConfigDict(extra="forbid")

    stages: int = Field(default=4, ge=1, description="Number of collection stages R")
    fresh_per_stage: int = Field(default=200, ge=2, description="Fresh rows added per stage")
    dup_fraction: float = Field(
        default=0.3,
        ge=0.0,
        le=1.0,
        description="Copies of earlier rows added per later stage, as a share of fresh_per_stage",
    )
    seed: int = Field(default=0, ge=0, le=SEED_MAX)

    def duplicates_per_stage(self) -> int:
        return int(self.dup_fraction * self.fresh_per_stage)


class EarlyStopConfig(BaseModel):
    patience: int = Field(default=10, ge=1, description="Epochs without improvement tolerated")


class TrainConfig(BaseModel):
    """Full-batch gradient-descent settings for the MLP."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=0.05, gt=0.0)
    max_epochs: int = Field(default=200, ge=1)
    early_stop: EarlyStopConfig | None = Field(
        default=None, description="Stop on validation loss when set"
    )
    hidden: tuple[int, ...] = Field(default=(100, 50), description="Hidden layer widths")
    seed: int = Field(default=0, ge=0, le=SEED_MAX)

    @field_validator("hidden")
    @classmethod
    def validate_hidden(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or any(width < 1 for width in v):
            raise ValueError("hidden widths must be a nonempty list of positive integers")
        return v


def _experiment_train_config() -> TrainConfig:
    return TrainConfig(learning_rate=0.5, max_epochs=300)


def _frange(start: float, stop: float, step: float) -> list[float]:
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


# Sweep axes and per-kind overrides applied by ExperimentConfig.for_kind.
KIND_DEFAULTS: dict[str, dict[str, Any]] = {
    "frankenstein": {"sweep": [1.0, 2.0, 3.0, 4.0], "folds": 5},
    "label_delta": {"sweep": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0], "folds": 1},
    "smote_overlap": {
        "sweep": [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0],
        "folds": 5,
        "blob": {"minority_fraction": 0.2},
    },
    "normalization_shift": {"sweep": _frange(0.0, 5.0, 0.5), "folds": 5},
    "set_intersection": {"sweep": _frange(0.0, 1.0, 0.1), "folds": 5},
    "window_overlap": {"sweep": _frange(0.0, 0.9, 0.1), "folds": 1},
    "distribution_shift": {"sweep": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0], "folds": 1},
}


class FrankensteinSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fresh_per_stage: int = Field(default=200, ge=2)
    dup_fraction: float = Field(default=0.3, ge=0.0, le=1.0)


class ExperimentConfig(BaseModel):
    """One experiment: a swept leakage parameter with paired leaky/clean runs."""

    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind = Field(description="Which experiment to run")
    sweep: list[float] = Field(description="Swept parameter values, strictly increasing")
    repeats: int = Field(default=10, ge=1, description="Independent repetitions per sweep value")
    folds: int = Field(default=5, ge=1, description="CV folds (1 for holdout experiments)")
    seed: int = Field(default=0, ge=0, le=SEED_MAX)
    workers: int = Field(default=1, ge=1, description="Concurrent worker threads")
    blob: BlobConfig = Field(default_factory=BlobConfig)
    train: TrainConfig = Field(default_factory=_experiment_train_config)
    frankenstein: FrankensteinSettings = Field(default_factory=FrankensteinSettings)
    smote_k: int = Field(default=5, ge=1, description="SMOTE neighbour count")
    n_sources: int = Field(default=2, ge=2, description="Sources in the distribution experiment")
    window_length: int | None = Field(
        default=None, ge=2, description="Window length (defaults to blob.n // 2)"
    )
    eval_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)

    @field_validator("sweep")
    @classmethod
    def validate_sweep(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("sweep must not be empty")
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("sweep values must be strictly increasing")
        return v

    @model_validator(mode="after")
    def check_kind_parameters(self) -> "ExperimentConfig":
        if self.kind in CV_KINDS and self.folds < 2:
            raise ValueError(f"{self.kind} uses cross-validation and needs folds >= 2")
        if self.kind == "frankenstein" and any(
            s < 1 or s != int(s) for s in self.sweep
        ):
            raise ValueError("frankenstein sweep values are stage counts (integers >= 1)")
        if self.kind in {"smote_overlap", "set_intersection"} and any(
            not 0.0 <= s <= 1.0 for s in self.sweep
        ):
            raise ValueError(f"{self.kind} sweep values are ratios in [0, 1]")
        if self.kind == "window_overlap" and any(not 0.0 <= s < 1.0 for s in self.sweep):
            raise ValueError("window_overlap sweep values must lie in [0, 1)")
        if self.kind in {"label_delta", "distribution_shift"} and any(s < 0 for s in self.sweep):
            raise ValueError(f"{self.kind} sweep values must be non-negative")
        return self

    @classmethod
    def for_kind(cls, kind: str, **overrides: Any) -> "ExperimentConfig":
        """Defaults for ``kind`` with ``overrides`` merged on top (nested dicts merge)."""
        if kind not in KIND_DEFAULTS:
            raise ConfigError(
                f"unknown experiment '{kind}'; expected one of {', '.join(EXPERIMENT_KINDS)}"
            )
        data: dict[str, Any] = {"kind": kind}
        _deep_merge(data, KIND_DEFAULTS[kind])
        _deep_merge(data, overrides)
        return cls.model_validate(data)

    def window_length_or_default(self) -> int:
        return self.window_length if self.window_length is not None else self.blob.n // 2


def _deep_merge(target: dict[str, Any], source: dict[str, Any]) -> dict[str, Any]:
    for key, value in source.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            _deep_merge(target[key], value)
        elif isinstance(value, dict):
            target[key] = _deep_merge({}, value)
        else:
            target[key] = value
    return target


class SynthConfig(BaseModel):
    """Settings for the ``synth`` command."""

    model_config = ConfigDict(extra="forbid")

    generator: Literal["blobs", "multisource", "windows", "frankenstein"] = "blobs"
    blob: BlobConfig = Field(default_factory=BlobConfig)
    n_sources: int = Field(default=2, ge=2)
    source_shift: float = Field(default=0.0, ge=0.0)
    overlap: float = Field(default=0.0, description="Window overlap ratio in [0, 1)")
    window_length: int | None = Field(default=None, ge=2)
    frankenstein: FrankensteinPlan = Field(default_factory=FrankensteinPlan)

    @field_validator("overlap")
    @classmethod
    def validate_overlap(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"overlap must lie in [0, 1), got {v}")
        return v


class CliConfig(BaseModel):
    """Resolved command-line settings."""

    subcommand: str = Field(description="Command being run")
    config_path: Path | None = Field(default=None, description="Config file, if any")
    seed: int | None = Field(default=None, ge=0, le=SEED_MAX, description="Seed override")
    output_dir: Path = Field(default=Path("./results"), description="Directory for outputs")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(default="WARNING")
