"""Declarative pipeline manifests checked by the linter."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Paradigm = Literal["inductive", "transductive", "domain_adaptation", "domain_generalization"]
Axis = Literal["cross_source", "cross_time", "cross_group", "none"]
TargetRole = Literal["predict_known_target_only", "generalize_to_target_domain"]
Region = Literal["train", "eval", "validation", "all", "source", "target_train", "target_eval"]
StepKind = Literal[
    "collect",
    "synthesize",
    "preprocess",
    "feature_engineer",
    "split",
    "derive_validation",
    "train",
    "evaluate",
    "fine_tune",
]

FIT_KINDS = frozenset({"synthesize", "preprocess", "feature_engineer"})
LEARNING_KINDS = frozenset({"train", "fine_tune"})


class TaskContext(BaseModel):
    """What the task claims to generalize to."""

    model_config = ConfigDict(extra="forbid")

    paradigm: Paradigm = Field(default="inductive")
    axes: list[Axis] = Field(
        default_factory=lambda: ["none"], description="Generalization axes of the task"
    )
    target_role: TargetRole | None = Field(
        default=None, description="Domain adaptation only: what the target data is for"
    )

    @field_validator("axes")
    @classmethod
    def normalize_axes(cls, v: list[Axis]) -> list[Axis]:
        if not v:
            raise ValueError("axes must name at least one axis (use 'none' for no claim)")
        axes = sorted(set(v))
        if "none" in axes and len(axes) > 1:
            raise ValueError("'none' cannot be combined with another axis")
        return axes

    @model_validator(mode="after")
    def check_paradigm(self) -> TaskContext:
        if self.paradigm == "transductive" and self.axes != ["none"]:
            raise ValueError(
                "a transductive task makes no generalization claim: axes must be ['none']"
            )
        if self.paradigm == "domain_adaptation" and self.target_role is None:
            self.target_role = "generalize_to_target_domain"
        if self.paradigm != "domain_adaptation" and self.target_role is not None:
            raise ValueError("target_role only applies to domain_adaptation")
        return self

    @property
    def generalization_axis(self) -> frozenset[str]:
        return frozenset(self.axes)


class ManifestStep(BaseModel):
    """One declared pipeline step.

    ``fit_inputs`` lists the data regions the step learns from (for
    ``evaluate``, the region it scores on).
    """

    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    kind: StepKind
    fit_inputs: list[Region] = Field(default_factory=list)
    attributes: dict[str, Any] = Field(default_factory=dict)

    def flag(self, name: str) -> bool | None:
        """Boolean attribute ``name``, or None when undeclared."""
        value = self.attributes.get(name)
        return None if value is None else bool(value)


class Manifest(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "context": {"paradigm": "inductive", "axes": ["none"]},
                "steps": [
                    {"id": "split", "kind": "split", "attributes": {"strategy": "holdout"}},
                    {"id": "scale", "kind": "preprocess", "fit_inputs": ["train"],
                     "attributes": {"method": "standardize"}},
                    {"id": "fit", "kind": "train", "fit_inputs": ["train"]},
                    {"id": "score", "kind": "evaluate", "fit_inputs": ["eval"]},
                ],
            }
        },
    )

    context: TaskContext = Field(default_factory=TaskContext)
    steps: list[ManifestStep]
    description: str | None = None
