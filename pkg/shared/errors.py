"""Exception hierarchy shared by every leaklab component.

Each error also subclasses the closest builtin so callers that only know
``ValueError``/``RuntimeError`` keep working.
"""

from __future__ import annotations

from typing import Any


class LeakLabError(Exception):
    """Base class for all leaklab errors."""


class ConfigError(LeakLabError, ValueError):
    """Invalid parameter or configuration value."""


class DimensionError(LeakLabError, ValueError):
    """Column count or array shape does not match."""


class InsufficientDataError(LeakLabError, ValueError):
    """Not enough rows to perform the requested operation."""


class ClassCoverageError(InsufficientDataError):
    """An operation that needs both classes received only one."""


class DonorMissingError(InsufficientDataError):
    """A column has no observed donor value among the permitted rows."""


class MetadataError(LeakLabError, ValueError):
    """Required row metadata is absent or inconsistent."""


class PreconditionError(LeakLabError, ValueError):
    """Input violates an operation precondition (e.g. missing values at train time)."""


class SplitIndexError(LeakLabError, IndexError):
    """Row index outside the dataset."""


class PlanError(LeakLabError, ValueError):
    """Pipeline plan is structurally invalid or does not fit the dataset."""


class ManifestError(LeakLabError, ValueError):
    """Manifest failed structural validation.

    Attributes:
        defects: Every defect found, each prefixed with its location.
    """

    def __init__(self, defects: list[str]):
        self.defects = list(defects)
        super().__init__("; ".join(self.defects) if self.defects else "invalid manifest")


class DivergenceError(LeakLabError, RuntimeError):
    """Training produced a non-finite loss.

    Attributes:
        epoch: 1-based epoch at which the loss stopped being finite.
    """

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")


class AuditInvariantError(LeakLabError, RuntimeError):
    """An experiment run broke its clean/leaky audit expectation."""

    def __init__(self, run: str, expected: str, violations: list[Any]):
        self.run = run
        self.expected = expected
        self.violations = violations
        super().__init__(
            f"audit expectation failed for {run}: expected {expected}, "
            f"got {len(violations)} violation(s)"
        )
