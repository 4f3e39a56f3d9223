"""Output formatting for CLI commands."""

from rich.console import Console
from rich.table import Table

from lab.models.audit import AuditViolation
from lab.models.experiment import TrendSeries
from lab.report_writer import format_float
from shared.models.finding import Finding

console = Console()
err_console = Console(stderr=True)

_SEVERITY_STYLE = {"violation": "red", "caution": "yellow", "info": "blue"}


def print_success(message: str) -> None:
    """Print a success message."""
    err_console.print(f"[green]✓[/green] {message}")


def print_error(message: str) -> None:
    """Print an error message."""
    err_console.print(f"[red]✗[/red] {message}")


def print_warning(message: str) -> None:
    """Print a warning message."""
    err_console.print(f"[yellow]⚠[/yellow] {message}")


def print_info(message: str) -> None:
    """Print an info message."""
    err_console.print(f"[blue]ℹ[/blue] {message}")


def print_summary(series: TrendSeries) -> None:
    """Print per-point leaky/clean means with the gap between them."""
    table = Table(title=f"{series.experiment} ({series.repeats} repeats, {series.folds} fold(s))")
    table.add_column("Param", justify="right", style="cyan")
    table.add_column("Leaky mean", justify="right")
    table.add_column("Leaky std", justify="right", style="dim")
    table.add_column("Clean mean", justify="right")
    table.add_column("Clean std", justify="right", style="dim")
    table.add_column("Gap", justify="right", style="bold")

    for param in series.sweep:
        leaky = series.point(param, "leaky")
        clean = series.point(param, "clean")
        gap = leaky.mean - clean.mean
        style = "green" if gap > 0 else "white"
        table.add_row(
            format_float(param),
            f"{leaky.mean:.4f}",
            f"{leaky.std:.4f}",
            f"{clean.mean:.4f}",
            f"{clean.std:.4f}",
            f"[{style}]{gap:+.4f}[/{style}]",
        )

    console.print(table)


def print_findings(findings: list[Finding], source: str) -> None:
    """Print lint findings as a table, or a one-line all-clear."""
    if not findings:
        print_success(f"{source}: no findings")
        return

    table = Table(title=f"Findings in {source}")
    table.add_column("Step", style="dim", justify="right")
    table.add_column("Id", style="cyan")
    table.add_column("Rule")
    table.add_column("Severity")
    table.add_column("Category")
    table.add_column("Message", max_width=70)

    for f in findings:
        style = _SEVERITY_STYLE[f.severity]
        table.add_row(
            str(f.step_index),
            f.step_id,
            f.rule_id,
            f"[{style}]{f.severity}[/{style}]",
            f.taxonomy_category,
            f.message,
        )

    console.print(table)


def print_corpus(rows: list[tuple[str, str, str, str]]) -> None:
    """Print (label, rule, category, description) rows of the shipped corpus."""
    table = Table(title="Lint corpus")
    table.add_column("Manifest", style="cyan")
    table.add_column("Rule")
    table.add_column("Category")
    table.add_column("Description", max_width=60)

    for row in rows:
        table.add_row(*row)

    console.print(table)


def print_audit_violations(violations: list[AuditViolation], runs: int) -> None:
    """Print recomputed audit violations grouped by run."""
    if not violations:
        print_success(f"{runs} run(s) audited: no violations")
        return

    table = Table(title=f"Audit violations ({runs} run(s))")
    table.add_column("Run", style="cyan")
    table.add_column("Detail")

    for v in violations:
        table.add_row(v.run, v.describe())

    console.print(table)
