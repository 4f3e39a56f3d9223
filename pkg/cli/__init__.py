"""Command-line interface for leaklab."""

from cli.main import app

__all__ = ["app"]
