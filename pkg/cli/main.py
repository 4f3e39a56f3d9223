"""Main CLI application using Typer."""

from __future__ import annotations

import typer

from cli.commands.audit import app as audit_app
from cli.commands.experiment import app as experiment_app
from cli.commands.lint import lint_command
from cli.commands.synth import app as synth_app
from cli.output_formatter import console


def _version_callback(value: bool) -> None:
    if value:
        from importlib.metadata import version as get_version

        try:
            pkg_version = get_version("leaklab")
        except Exception:
            pkg_version = "unknown"
        console.print(f"leaklab v{pkg_version}")
        raise typer.Exit()


app = typer.Typer(
    name="leaklab",
    help="Data-leakage laboratory: leaky-versus-clean experiments and a pipeline linter.",
    add_completion=False,
)


@app.callback(invoke_without_command=True)
def app_callback(
    ctx: typer.Context,
    version: bool = typer.Option(
        False,
        "--version",
        "-V",
        help="Show version and exit",
        callback=_version_callback,
        is_eager=True,
    ),
) -> None:
    """Measure how leakage inflates evaluation and catch it in pipeline manifests."""
    if ctx.invoked_subcommand is None and not version:
        console.print(ctx.get_help())


app.add_typer(experiment_app, name="experiment", help="Run leaky-versus-clean trend experiments")
app.add_typer(synth_app, name="synth", help="Generate synthetic datasets")
app.add_typer(audit_app, name="audit", help="Verify recorded audit logs")
app.command("lint")(lint_command)


def main() -> None:
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
