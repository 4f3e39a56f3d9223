"""Experiment commands: run one leakage trend experiment."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import typer
from pydantic import ValidationError

from cli.config_manager import ConfigManager, describe_validation_error
from cli.output_formatter import console, print_error, print_info, print_success, print_summary
from lab.experiment_orchestrator import run_experiment
from lab.report_writer import ReportWriter
from shared.errors import ConfigError, LeakLabError
from shared.models.config import EXPERIMENT_KINDS, CliConfig
from shared.utils.logging import level_for, setup_logging

logger = logging.getLogger(__name__)

app = typer.Typer(help="Leaky-versus-clean trend experiments")


@app.command("run")
def experiment_run(
    name: str = typer.Argument(..., help=f"Experiment: {', '.join(EXPERIMENT_KINDS)}"),
    config: Path | None = typer.Option(None, "--config", "-c", help="JSON config file"),
    seed: int | None = typer.Option(None, "--seed", "-s", help="Root seed (overrides config)"),
    out: Path = typer.Option(Path("./results"), "--out", "-o", help="Output directory"),
    workers: int | None = typer.Option(None, "--workers", "-w", help="Worker threads"),
    repeats: int | None = typer.Option(None, "--repeats", "-r", help="Repeats per sweep value"),
    print_config: bool = typer.Option(
        False, "--print-config", help="Print the resolved config as JSON and exit"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output"),
) -> None:
    """Run experiment NAME and write raw, summary and audit files to --out.

    Exit codes: 0 success, 2 invalid config or unknown experiment,
    3 runtime failure (divergence or broken audit expectation).
    """
    try:
        cli = CliConfig(
            subcommand="experiment run",
            config_path=config,
            seed=seed,
            output_dir=out,
            log_level=level_for(verbose),
        )
    except ValidationError as e:
        print_error(describe_validation_error(e))
        raise typer.Exit(2) from e
    setup_logging(cli.log_level)

    try:
        cfg = ConfigManager(cli.config_path).load_experiment(
            name, seed=cli.seed, workers=workers, repeats=repeats
        )
    except ConfigError as e:
        print_error(str(e))
        raise typer.Exit(2) from e

    if print_config:
        typer.echo(json.dumps(cfg.model_dump(mode="json"), indent=2))
        raise typer.Exit(0)

    try:
        cli.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print_error(f"Cannot create output directory {cli.output_dir}: {e}")
        raise typer.Exit(2) from e

    print_info(f"Running {cfg.kind} with seed {cfg.seed}")
    try:
        series = run_experiment(cfg)
    except ConfigError as e:
        print_error(str(e))
        raise typer.Exit(2) from e
    except LeakLabError as e:
        print_error(f"Experiment failed: {e}")
        if verbose:
            console.print_exception()
        raise typer.Exit(3) from e

    try:
        paths = ReportWriter(cli.output_dir).write(series)
    except OSError as e:
        print_error(f"Cannot write reports: {e}")
        raise typer.Exit(3) from e
    print_summary(series)
    for path in paths.values():
        print_success(f"Wrote {path}")
