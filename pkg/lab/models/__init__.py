"""Value types of the engine: plans, audit logs, manifests, parameters and results."""

from lab.models.audit import AuditLog, AuditRecord, AuditViolation
from lab.models.experiment import RawResult, TrendPoint, TrendSeries
from lab.models.manifest import ManifestStep, TaskContext
from lab.models.params import PreprocParams
from lab.models.plan import PipelinePlan, ScopePolicy

__all__ = [
    "AuditLog",
    "AuditRecord",
    "AuditViolation",
    "RawResult",
    "TrendPoint",
    "TrendSeries",
    "ManifestStep",
    "TaskContext",
    "PreprocParams",
    "PipelinePlan",
    "ScopePolicy",
]
