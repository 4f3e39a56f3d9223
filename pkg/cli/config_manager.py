"""Configuration manager for loading and validating config files."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from shared.errors import ConfigError
from shared.models.config import SEED_MAX, ExperimentConfig, SynthConfig

SEED_ENV_VAR = "LEAKLAB_SEED"

ModelT = TypeVar("ModelT", bound=BaseModel)


def describe_validation_error(e: ValidationError) -> str:
    """Flatten a pydantic error into ``field.path: message`` lines."""
    parts = []
    for error in e.errors():
        where = ".".join(str(p) for p in error["loc"]) or "config"
        parts.append(f"{where}: {error['msg']}")
    return "; ".join(parts)


class ConfigManager:
    """Loads a JSON config document and resolves the run seed.

    The document is parsed with ``yaml.safe_load`` (JSON is a YAML subset), so
    the same loader reads both. Command-line overrides are merged on top of the
    file values before validation.
    """

    def __init__(self, config_path: Path | None = None):
        """Initialize the config manager.

        Args:
            config_path: Path to the config file; ``None`` means defaults only.
        """
        self.config_path = config_path
        self._raw: dict[str, Any] | None = None

    def raw(self) -> dict[str, Any]:
        """The parsed file as a dict (empty when no path was given).

        Raises:
            ConfigError: If the file is missing, unreadable or not a mapping.
        """
        if self._raw is not None:
            return self._raw
        if self.config_path is None:
            self._raw = {}
            return self._raw
        if not self.config_path.exists():
            raise ConfigError(f"Configuration file not found: {self.config_path}")
        try:
            with open(self.config_path, encoding="utf-8") as f:
                document = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot read {self.config_path}: {e}") from e
        if document is None:
            document = {}
        if not isinstance(document, dict):
            raise ConfigError(f"{self.config_path}: top level must be an object")
        self._raw = document
        return self._raw

    def resolve_seed(self, flag: int | None) -> int:
        """Seed priority: ``--seed`` flag > file ``seed`` > ``LEAKLAB_SEED`` > 0.

        Raises:
            ConfigError: If the environment value is not an integer in range.
        """
        if flag is not None:
            return flag
        file_seed = self.raw().get("seed")
        if file_seed is not None:
            if isinstance(file_seed, bool) or not isinstance(file_seed, int):
                raise ConfigError(f"seed must be an integer, got {file_seed!r}")
            return file_seed
        env = os.environ.get(SEED_ENV_VAR)
        if env:
            try:
                seed = int(env)
            except ValueError as e:
                raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from e
            if not 0 <= seed <= SEED_MAX:
                raise ConfigError(f"{SEED_ENV_VAR} out of range: {seed}")
            return seed
        return 0

    def _validate(self, model: type[ModelT], data: dict[str, Any]) -> ModelT:
        try:
            return model.model_validate(data)
        except ValidationError as e:
            raise ConfigError(describe_validation_error(e)) from e

    def section(self, model: type[ModelT], key: str) -> ModelT:
        """Validate the ``key`` block of the file into ``model`` (defaults when absent)."""
        block = self.raw().get(key) or {}
        if not isinstance(block, dict):
            raise ConfigError(f"{key} must be an object")
        return self._validate(model, block)

    def load_experiment(self, name: str, **overrides: Any) -> ExperimentConfig:
        """Per-kind defaults, then file values, then non-``None`` overrides.

        Raises:
            ConfigError: Unknown experiment, a ``kind`` in the file that
                disagrees with ``name``, or any invalid value.
        """
        data = dict(self.raw())
        file_kind = data.pop("kind", name)
        if file_kind != name:
            raise ConfigError(f"config kind '{file_kind}' does not match experiment '{name}'")
        data.update({k: v for k, v in overrides.items() if v is not None})
        data["seed"] = self.resolve_seed(overrides.get("seed"))
        try:
            return ExperimentConfig.for_kind(name, **data)
        except ValidationError as e:
            raise ConfigError(describe_validation_error(e)) from e

    def load_synth(self, generator: str, seed: int | None = None, **overrides: Any) -> SynthConfig:
        """Synth config for ``generator``.

        The resolved run seed replaces ``blob.seed`` and ``frankenstein.seed``.
        """
        data = dict(self.raw())
        data.pop("seed", None)
        data.update({k: v for k, v in overrides.items() if v is not None})
        data["generator"] = generator
        cfg = self._validate(SynthConfig, data)
        resolved = self.resolve_seed(seed)
        return cfg.model_copy(
            update={
                "blob": cfg.blob.model_copy(update={"seed": resolved}),
                "frankenstein": cfg.frankenstein.model_copy(update={"seed": resolved}),
            }
        )
