"""Pipeline plan steps and the scope policy that decides what each fit may see."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from pydantic import BaseModel, Field

from lab.models.params import PreprocKind
from shared.errors import PlanError
from shared.models.config import TrainConfig
from shared.models.dataset import Dataset, SplitPair

SplitStrategy = Literal["holdout", "kfold", "with_replacement", "group", "temporal", "fixed"]


class ScopePolicy(BaseModel):
    """Which rows data-dependent steps may learn from.

    ``clean`` restricts every fit to training rows; ``leaky`` lets fits see
    evaluation rows too (``eval_exposure`` of them, all by default). With
    ``split_after_fit`` a leaky pipeline transforms the whole dataset before
    splitting, and a clean one fits on the training set before carving the
    validation set out of it.
    """

    mode: Literal["clean", "leaky"] = Field(default="clean")
    validation_handling: Literal["split_before_fit", "split_after_fit"] = Field(
        default="split_before_fit"
    )
    eval_exposure: float = Field(
        default=1.0, ge=0.0, le=1.0, description="Share of eval rows visible to leaky fits"
    )
    validation_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)

    @property
    def leaky(self) -> bool:
        return self.mode == "leaky"

    @property
    def fully_safe(self) -> bool:
        return self.mode == "clean" and self.validation_handling == "split_before_fit"


@dataclass(frozen=True)
class LabelFeatureStep:
    """Append one feature that tracks the label in leaky mode and is pure noise otherwise."""

    delta: float
    name: str = "label_feature"
    kind: str = field(default="label_feature", init=False)


@dataclass(frozen=True)
class SynthesizeStep:
    """SMOTE oversampling or cluster-centroid undersampling.

    ``target_class`` is the minority class for SMOTE and the majority class for
    centroids; when None it is inferred from the training rows. ``n_new=None``
    balances the classes.
    """

    method: Literal["smote", "centroid"] = "smote"
    target_class: int | None = None
    k: int = 5
    n_new: int | None = None
    n_clusters: int = 10
    name: str | None = None
    kind: str = field(default="synthesize", init=False)

    @property
    def label(self) -> str:
        return self.name or self.method


@dataclass(frozen=True)
class PreprocessStep:
    """A fit/apply transform. ``pinned`` steps always fit on the clean training remainder."""

    transform: PreprocKind = "standardize"
    k: int = 5
    window: int = 3
    top_k: int = 1
    pinned: bool = False
    name: str | None = None
    kind: str = field(default="preprocess", init=False)

    @property
    def label(self) -> str:
        return self.name or self.transform


@dataclass(frozen=True)
class SplitStep:
    """How train and eval are separated.

    ``leaky_strategy``, ``contamination`` and the policy's eval exposure only
    act in leaky mode; ``on_shared`` only acts in clean mode.
    """

    strategy: SplitStrategy = "holdout"
    eval_fraction: float = 0.2
    stratified: bool = True
    k: int = 5
    fold: int = 0
    held_out: int | None = None
    group_axis: Literal["group", "source"] = "group"
    cut_time: int | None = None
    pair: SplitPair | None = None
    leaky_strategy: SplitStrategy | None = None
    contamination: float = 0.0
    on_shared: Literal["keep", "drop_eval", "drop_train"] = "keep"
    name: str = "split"
    kind: str = field(default="split", init=False)


@dataclass(frozen=True)
class TrainStep:
    config: TrainConfig = field(default_factory=TrainConfig)
    uses_validation: bool = False
    name: str = "train"
    kind: str = field(default="train", init=False)


@dataclass(frozen=True)
class EvaluateStep:
    name: str = "evaluate"
    kind: str = field(default="evaluate", init=False)


PlanStep = LabelFeatureStep | SynthesizeStep | PreprocessStep | SplitStep | TrainStep | EvaluateStep


def step_label(step: PlanStep) -> str:
    if isinstance(step, SynthesizeStep | PreprocessStep):
        return step.label
    return step.name


@dataclass(frozen=True)
class PipelinePlan:
    """Ordered steps: label features first, then fits and exactly one split in
    any order, then one train step and one evaluate step.
    """

    steps: tuple[PlanStep, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        self.validate()

    def validate(self) -> None:
        kinds = [s.kind for s in self.steps]
        if kinds.count("split") != 1:
            raise PlanError(f"plan needs exactly one split step, found {kinds.count('split')}")
        if kinds.count("train") != 1 or kinds.count("evaluate") != 1:
            raise PlanError("plan needs exactly one train step and one evaluate step")
        if kinds[-2:] != ["train", "evaluate"]:
            raise PlanError("plan must end with train followed by evaluate")
        seen_other = False
        for kind in kinds:
            if kind == "label_feature" and seen_other:
                raise PlanError("label_feature steps must come before every other step")
            seen_other = seen_other or kind != "label_feature"

    @property
    def split(self) -> SplitStep:
        return next(s for s in self.steps if isinstance(s, SplitStep))

    @property
    def train(self) -> TrainStep:
        return next(s for s in self.steps if isinstance(s, TrainStep))

    def fit_steps(self) -> list[tuple[int, SynthesizeStep | PreprocessStep]]:
        return [
            (i, s)
            for i, s in enumerate(self.steps)
            if isinstance(s, SynthesizeStep | PreprocessStep)
        ]

    def is_data_dependent(self) -> bool:
        """True when some step learns from data before training."""
        return any(s.kind in {"label_feature", "synthesize", "preprocess"} for s in self.steps)

    def validate_for(self, ds: Dataset) -> None:
        """Check metadata the plan's strategies need.

        Raises:
            PlanError: A required metadata column is absent or a parameter
                does not fit the dataset.
        """
        split = self.split
        if split.strategy == "group":
            column = "group_id" if split.group_axis == "group" else "source_id"
            if not ds.meta.has(column):
                raise PlanError(f"group split needs {column} on every row")
            if split.held_out is None:
                raise PlanError("group split needs a held_out id")
        if split.strategy == "temporal":
            if split.cut_time is None:
                raise PlanError("temporal split needs cut_time")
            if not ds.meta.has("time_index"):
                raise PlanError("temporal split needs time_index on every row")
        if split.strategy == "fixed":
            if split.pair is None:
                raise PlanError("fixed split needs a SplitPair")
            split.pair.validate_for(ds)
        if split.strategy == "kfold" and not 0 <= split.fold < split.k:
            raise PlanError(f"fold {split.fold} outside 0..{split.k - 1}")
        if not 0.0 <= split.contamination <= 1.0:
            raise PlanError("contamination must lie in [0, 1]")
        for _, step in self.fit_steps():
            if isinstance(step, PreprocessStep) and step.transform == "moving_average":
                if not ds.meta.has("time_index"):
                    raise PlanError("moving_average needs time_index on every row")
