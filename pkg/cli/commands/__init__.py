"""CLI command submodules."""

from cli.commands import audit, experiment, lint, synth

__all__ = ["audit", "experiment", "lint", "synth"]
