"""Synthetic dataset commands."""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from pathlib import Path

import typer

from cli.config_manager import ConfigManager
from cli.output_formatter import print_error, print_info, print_success, print_warning
from lab.calibration import calibrate_separation
from lab.synth import compose_frankenstein, gen_blobs, gen_drifting_windows, gen_multisource
from shared.errors import ConfigError, LeakLabError
from shared.models.config import BlobConfig, SynthConfig, TrainConfig
from shared.models.dataset import Dataset
from shared.utils.dataset_io import write_csv
from shared.utils.logging import level_for, setup_logging

logger = logging.getLogger(__name__)

app = typer.Typer(help="Generate synthetic datasets as CSV")

_CONFIG_OPTION = typer.Option(None, "--config", "-c", help="JSON config file")
_SEED_OPTION = typer.Option(None, "--seed", "-s", help="Generator seed (overrides config)")
_PRINT_OPTION = typer.Option(False, "--print-config", help="Print the resolved config and exit")
_VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Verbose output")


def _load(
    generator: str,
    config: Path | None,
    seed: int | None,
    print_config: bool,
    verbose: bool,
    **overrides: object,
) -> SynthConfig:
    setup_logging(level_for(verbose))
    try:
        cfg = ConfigManager(config).load_synth(generator, seed, **overrides)
    except ConfigError as e:
        print_error(str(e))
        raise typer.Exit(2) from e
    if print_config:
        typer.echo(json.dumps(cfg.model_dump(mode="json"), indent=2))
        raise typer.Exit(0)
    return cfg


def _generate(build: Callable[[], dict[Path, Dataset]]) -> None:
    try:
        outputs = build()
    except ConfigError as e:
        print_error(str(e))
        raise typer.Exit(2) from e
    except LeakLabError as e:
        print_error(f"Generation failed: {e}")
        raise typer.Exit(3) from e

    for path, ds in outputs.items():
        try:
            write_csv(ds, path)
        except OSError as e:
            print_error(f"Cannot write {path}: {e}")
            raise typer.Exit(3) from e
        print_success(f"Wrote {ds.n_rows} rows x {ds.n_features} features to {path}")


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}_{suffix}{out.suffix or '.csv'}")


@app.command("blobs")
def synth_blobs(
    config: Path | None = _CONFIG_OPTION,
    out: Path = typer.Option(Path("blobs.csv"), "--out", "-o", help="Output CSV"),
    seed: int | None = _SEED_OPTION,
    print_config: bool = _PRINT_OPTION,
    verbose: bool = _VERBOSE_OPTION,
) -> None:
    """Two-class Gaussian blobs."""
    cfg = _load("blobs", config, seed, print_config, verbose)
    _generate(lambda: {out: gen_blobs(cfg.blob)})


@app.command("multisource")
def synth_multisource(
    config: Path | None = _CONFIG_OPTION,
    out: Path = typer.Option(Path("multisource.csv"), "--out", "-o", help="Output CSV"),
    seed: int | None = _SEED_OPTION,
    print_config: bool = _PRINT_OPTION,
    verbose: bool = _VERBOSE_OPTION,
) -> None:
    """Blobs split into sources, each shifted by its own offset."""
    cfg = _load("multisource", config, seed, print_config, verbose)
    _generate(lambda: {out: gen_multisource(cfg.blob, cfg.n_sources, cfg.source_shift)})


@app.command("windows")
def synth_windows(
    config: Path | None = _CONFIG_OPTION,
    out: Path = typer.Option(
        Path("windows.csv"), "--out", "-o", help="Stem for <stem>_train.csv / <stem>_eval.csv"
    ),
    overlap: float | None = typer.Option(None, "--overlap", help="Shared share of window rows"),
    seed: int | None = _SEED_OPTION,
    print_config: bool = _PRINT_OPTION,
    verbose: bool = _VERBOSE_OPTION,
) -> None:
    """Train and eval windows over one drifting sequence."""
    cfg = _load("windows", config, seed, print_config, verbose, overlap=overlap)

    def build() -> dict[Path, Dataset]:
        train, eval_window = gen_drifting_windows(cfg.blob, cfg.overlap, cfg.window_length)
        return {_sibling(out, "train"): train, _sibling(out, "eval"): eval_window}

    _generate(build)


@app.command("frankenstein")
def synth_frankenstein(
    config: Path | None = _CONFIG_OPTION,
    out: Path = typer.Option(Path("frankenstein.csv"), "--out", "-o", help="Output CSV"),
    seed: int | None = _SEED_OPTION,
    print_config: bool = _PRINT_OPTION,
    verbose: bool = _VERBOSE_OPTION,
) -> None:
    """Staged re-collection; writes the final cumulative dataset."""
    cfg = _load("frankenstein", config, seed, print_config, verbose)
    _generate(lambda: {out: compose_frankenstein(cfg.frankenstein, cfg.blob)[-1]})


@app.command("calibrate")
def synth_calibrate(
    config: Path | None = _CONFIG_OPTION,
    low: float = typer.Option(0.80, "--low", help="Lower clean-accuracy target"),
    high: float = typer.Option(0.93, "--high", help="Upper clean-accuracy target"),
    folds: int = typer.Option(5, "--folds", help="Cross-validation folds"),
    seed: int | None = _SEED_OPTION,
    verbose: bool = _VERBOSE_OPTION,
) -> None:
    """Find a blob separation whose clean CV accuracy lands in [LOW, HIGH]."""
    setup_logging(level_for(verbose))
    try:
        manager = ConfigManager(config)
        blob = manager.section(BlobConfig, "blob")
        blob = blob.model_copy(update={"seed": manager.resolve_seed(seed)})
        train = manager.section(TrainConfig, "train")
        if folds < 2:
            raise ConfigError(f"folds must be at least 2, got {folds}")
        result = calibrate_separation(blob, train, (low, high), folds)
    except ConfigError as e:
        print_error(str(e))
        raise typer.Exit(2) from e
    except LeakLabError as e:
        print_error(f"Calibration failed: {e}")
        raise typer.Exit(3) from e

    if result.converged:
        print_success(f"separation={result.separation:.6g} accuracy={result.accuracy:.4f}")
    else:
        print_warning(
            f"No separation in the band after {result.iterations} probes; "
            f"last separation={result.separation:.6g} accuracy={result.accuracy:.4f}"
        )
    print_info(f"{result.iterations} probe(s)")
    typer.echo(result.model_dump_json())
