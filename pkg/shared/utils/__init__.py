"""Shared utilities."""

from shared.utils.logging import level_for, setup_logging

__all__ = ["setup_logging", "level_for"]
