"""Learned preprocessing parameters."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

PreprocKind = Literal["standardize", "minmax", "knn_impute", "moving_average", "ttest_select"]


class PreprocParams(BaseModel):
    """Parameters learned by a preprocessing fit.

    Only the payload fields of ``kind`` are set. ``reference`` holds the donor
    rows of a KNN imputer with ``None`` for missing cells.
    """

    model_config = ConfigDict(frozen=True)

    kind: PreprocKind
    n_features: int = Field(..., ge=1, description="Column count seen at fit time")
    fitted_on: int = Field(..., ge=0, description="Number of rows used to fit")
    supervised: bool = Field(default=False, description="True when the fit read labels")
    mu: list[float] | None = None
    sigma: list[float] | None = None
    mins: list[float] | None = None
    maxs: list[float] | None = None
    reference: list[list[float | None]] | None = None
    k: int | None = Field(default=None, ge=1)
    window: int | None = Field(default=None, ge=1)
    selected: list[int] | None = None

    @model_validator(mode="after")
    def check_payload(self) -> "PreprocParams":
        d = self.n_features
        if self.kind == "standardize":
            if self.mu is None or self.sigma is None:
                raise ValueError("standardize params need mu and sigma")
            if len(self.mu) != d or len(self.sigma) != d:
                raise ValueError("mu and sigma must have one entry per feature")
            if any(s < 0 for s in self.sigma):
                raise ValueError("sigma entries must be non-negative")
        elif self.kind == "minmax":
            if self.mins is None or self.maxs is None:
                raise ValueError("minmax params need mins and maxs")
            if len(self.mins) != d or len(self.maxs) != d:
                raise ValueError("mins and maxs must have one entry per feature")
            if any(lo > hi for lo, hi in zip(self.mins, self.maxs, strict=True)):
                raise ValueError("min must not exceed max for any feature")
        elif self.kind == "knn_impute":
            if self.reference is None or self.k is None:
                raise ValueError("knn_impute params need reference rows and k")
        elif self.kind == "moving_average":
            if self.window is None or self.window % 2 == 0:
                raise ValueError("moving_average params need an odd window")
        elif self.kind == "ttest_select":
            if not self.selected:
                raise ValueError("ttest_select params need a nonempty selection")
            if self.selected != sorted(set(self.selected)):
                raise ValueError("selected indices must be unique and sorted")
            if self.selected[-1] >= d or self.selected[0] < 0:
                raise ValueError("selected indices must lie in [0, n_features)")
        return self

    def reference_matrix(self) -> np.ndarray:
        assert self.reference is not None
        return np.array(
            [[np.nan if v is None else v for v in row] for row in self.reference],
            dtype=np.float64,
        ).reshape(len(self.reference), self.n_features)
