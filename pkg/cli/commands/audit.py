"""Audit commands: recompute leaks from a recorded audit log."""

from __future__ import annotations

import logging
from pathlib import Path

import typer

from cli.output_formatter import print_audit_violations, print_error, print_warning
from lab.models.audit import AuditLog
from lab.pipeline import audit_check
from shared.errors import ConfigError
from shared.utils.logging import level_for, setup_logging

logger = logging.getLogger(__name__)

app = typer.Typer(help="Audit log verification")


def _flag_mismatches(log: AuditLog, flagged: set[tuple[int, str, str]]) -> int:
    return sum(1 for r in log.records if r.violation != ((r.step, r.name, r.role) in flagged))


@app.command("check")
def audit_check_command(
    path: Path = typer.Argument(..., help="Audit log (JSON lines)"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output"),
) -> None:
    """Recompute every violation in the audit log at PATH.

    Exit codes: 0 every run clean, 1 at least one violation, 2 unreadable or
    malformed log.
    """
    setup_logging(level_for(verbose))

    try:
        logs = AuditLog.from_jsonl(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as e:
        print_error(f"Cannot read {path}: {e}")
        raise typer.Exit(2) from e
    except ConfigError as e:
        print_error(f"{path}: {e}")
        raise typer.Exit(2) from e

    found = []
    for log in logs:
        violations = audit_check(log)
        mismatched = _flag_mismatches(log, {(v.step, v.name, v.role) for v in violations})
        if mismatched:
            print_warning(f"{log.run}: {mismatched} stored violation flag(s) disagree")
        found.extend(violations)

    logger.debug(f"Audited {len(logs)} runs, {len(found)} violations")
    print_audit_violations(found, len(logs))
    raise typer.Exit(1 if found else 0)
