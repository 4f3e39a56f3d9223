"""Lint finding schema and the leakage taxonomy vocabulary."""

from typing import Literal

from pydantic import BaseModel, Field

TaxonomyCategory = Literal[
    "data_collecting",
    "synthesis",
    "direct_label",
    "indirect_label",
    "normalization",
    "cleaning",
    "imputation",
    "feature_engineering",
    "sets_intersection",
    "overlap",
    "distribution",
]

TAXONOMY_CATEGORIES: tuple[str, ...] = (
    "data_collecting",
    "synthesis",
    "direct_label",
    "indirect_label",
    "normalization",
    "cleaning",
    "imputation",
    "feature_engineering",
    "sets_intersection",
    "overlap",
    "distribution",
)

Severity = Literal["violation", "caution", "info"]


class Finding(BaseModel):
    """One lint result attached to a manifest step.

    Findings sort by the step's position in the manifest, then by rule number.
    """

    rule_id: str = Field(..., pattern=r"^R\d+$", description="Rule identifier, e.g. R1")
    taxonomy_category: TaxonomyCategory = Field(..., description="Leaf of the leakage taxonomy")
    severity: Severity = Field(..., description="violation, caution or info")
    step_id: str = Field(..., description="Manifest step the finding points at")
    step_index: int = Field(..., ge=0, description="Position of the step in the manifest")
    message: str = Field(..., description="Human-readable explanation")

    @property
    def rule_number(self) -> int:
        return int(self.rule_id[1:])

    def sort_key(self) -> tuple[int, int]:
        return self.step_index, self.rule_number

    class Config:
        """Pydantic model configuration."""

        json_schema_extra = {
            "example": {
                "rule_id": "R1",
                "taxonomy_category": "normalization",
                "severity": "violation",
                "step_id": "scale",
                "step_index": 1,
                "message": "standardize is fitted on eval rows before the split",
            }
        }
