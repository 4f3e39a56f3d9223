"""Logging utilities for consistent logging across components."""

import logging
import sys
from typing import Literal, TextIO

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    level: str = "INFO",
    format_string: str | None = None,
    name: str | None = None,
    stream: TextIO | None = None,
) -> logging.Logger:
    """Set up logging with consistent formatting.

    Records go to stderr by default so that machine-readable command output
    (CSV, JSON lines) on stdout stays parseable.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        format_string: Optional custom format string
        name: Logger name (default: root logger)
        stream: Destination stream (default: stderr)

    Returns:
        Configured logger instance
    """
    numeric = getattr(logging, level.upper())

    logger = logging.getLogger(name)
    logger.setLevel(numeric)

    # Remove existing handlers to avoid duplicates
    logger.handlers.clear()

    handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
    handler.setLevel(numeric)
    handler.setFormatter(logging.Formatter(format_string or DEFAULT_FORMAT))
    logger.addHandler(handler)

    return logger


def level_for(verbose: bool) -> Literal["DEBUG", "WARNING"]:
    """CLI verbosity flag to a level name."""
    return "DEBUG" if verbose else "WARNING"
