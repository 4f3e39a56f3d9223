"""Audit records: what every fitted component of a pipeline run saw."""

from __future__ import annotations

import json
from collections.abc import Iterable
from typing import Literal

from pydantic import BaseModel, Field, ValidationError

from shared.errors import ConfigError

AuditRole = Literal["split", "fit", "train", "validation", "groups"]


class AuditRecord(BaseModel):
    """One pipeline step's view of the data.

    ``split`` records carry the held-out provenance of the run; ``fit``,
    ``train`` and ``validation`` records carry what a component learned from;
    ``groups`` records compare the group ids on each side of the split.
    """

    run: str = Field(default="run", description="Execution label")
    step: int = Field(..., ge=0, description="Position of the step in the plan")
    name: str = Field(..., description="Step name, e.g. standardize")
    kind: str = Field(..., description="Step kind, e.g. preprocess")
    role: AuditRole
    saw_provenance: list[int] = Field(default_factory=list)
    eval_provenance: list[int] | None = None
    validation_provenance: list[int] | None = None
    saw_groups: list[int] | None = None
    eval_groups: list[int] | None = None
    violation: bool = False


class AuditViolation(BaseModel):
    run: str
    step: int
    name: str
    role: AuditRole
    offending: list[int] = Field(description="Provenance (or group) ids on both sides")

    def describe(self) -> str:
        what = "group ids" if self.role == "groups" else "eval provenance ids"
        shown = ", ".join(str(i) for i in self.offending[:10])
        more = f" (+{len(self.offending) - 10} more)" if len(self.offending) > 10 else ""
        return f"step {self.step} ({self.name}, {self.role}) saw {what}: {shown}{more}"


class AuditLog(BaseModel):
    """Ordered audit records of a single run."""

    run: str = "run"
    records: list[AuditRecord] = Field(default_factory=list)

    def add(self, record: AuditRecord) -> AuditRecord:
        self.records.append(record)
        return record

    def split_record(self) -> AuditRecord | None:
        return next((r for r in self.records if r.role == "split"), None)

    def relabel(self, run: str) -> AuditLog:
        return AuditLog(
            run=run, records=[r.model_copy(update={"run": run}) for r in self.records]
        )

    def to_jsonl(self) -> str:
        return "".join(r.model_dump_json() + "\n" for r in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> list[AuditLog]:
        """Parse JSON lines into one log per run, in order of first appearance.

        Raises:
            ConfigError: On a malformed line, naming its line number.
        """
        logs: dict[str, AuditLog] = {}
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = AuditRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise ConfigError(f"line {line_no}: invalid audit record: {e}") from e
            logs.setdefault(record.run, AuditLog(run=record.run)).records.append(record)
        return list(logs.values())


def logs_to_jsonl(logs: Iterable[AuditLog]) -> str:
    return "".join(log.to_jsonl() for log in logs)
