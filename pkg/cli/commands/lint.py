"""Lint command: check a pipeline manifest for leakage."""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path

import typer
from pydantic import ValidationError

from cli.config_manager import describe_validation_error
from cli.output_formatter import print_corpus, print_error, print_findings
from lab.corpus import load_corpus
from lab.linter import lint, parse_manifest, violations
from lab.models.manifest import TaskContext
from shared.errors import ManifestError
from shared.models.finding import Finding
from shared.utils.logging import level_for, setup_logging

logger = logging.getLogger(__name__)


class OutputFormat(str, Enum):
    TABLE = "table"
    JSONL = "jsonl"


class ParadigmOption(str, Enum):
    INDUCTIVE = "inductive"
    TRANSDUCTIVE = "transductive"
    DOMAIN_ADAPTATION = "domain_adaptation"
    DOMAIN_GENERALIZATION = "domain_generalization"


def _with_paradigm(ctx: TaskContext, paradigm: str) -> TaskContext:
    data = ctx.model_dump()
    data["paradigm"] = paradigm
    if paradigm != "domain_adaptation":
        data["target_role"] = None
    return TaskContext.model_validate(data)


def _render_jsonl(findings: list[Finding]) -> None:
    for f in findings:
        typer.echo(f.model_dump_json())


def lint_command(
    path: Path | None = typer.Argument(None, help="Manifest file (JSON)"),
    output_format: OutputFormat = typer.Option(
        OutputFormat.TABLE, "--format", "-f", help="table or jsonl"
    ),
    paradigm: ParadigmOption | None = typer.Option(
        None, "--context-paradigm", help="Override the manifest's learning paradigm"
    ),
    list_corpus: bool = typer.Option(False, "--list-corpus", help="List the shipped corpus"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output"),
) -> None:
    """Lint the pipeline manifest at PATH.

    Exit codes: 0 no violations, 1 at least one violation-severity finding,
    2 unreadable or malformed manifest.
    """
    setup_logging(level_for(verbose))

    if list_corpus:
        print_corpus([(e.label, e.rule, e.category, e.description) for e in load_corpus()])
        raise typer.Exit(0)

    if path is None:
        print_error("Missing manifest path")
        raise typer.Exit(2)

    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print_error(f"Cannot read {path}: {e}")
        raise typer.Exit(2) from e

    try:
        steps, ctx = parse_manifest(text)
        if paradigm is not None:
            ctx = _with_paradigm(ctx, paradigm.value)
        findings = lint(steps, ctx)
    except ManifestError as e:
        for defect in e.defects:
            print_error(f"{path}: {defect}")
        raise typer.Exit(2) from e
    except ValidationError as e:
        print_error(f"{path}: context: {describe_validation_error(e)}")
        raise typer.Exit(2) from e

    if output_format is OutputFormat.JSONL:
        _render_jsonl(findings)
    else:
        print_findings(findings, str(path))

    raise typer.Exit(1 if violations(findings) else 0)
