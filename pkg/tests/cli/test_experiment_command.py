"""Tests for the experiment run command."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any
from unittest.mock import patch

import pytest
from typer.testing import CliRunner

from cli.config_manager import SEED_ENV_VAR
from cli.main import app
from shared.errors import AuditInvariantError, DivergenceError

runner = CliRunner()

_SMALL: dict[str, Any] = {
    "blob": {"n": 80, "d": 4, "n_informative": 2, "separation": 2.0},
    "train": {"hidden": [6], "max_epochs": 8, "learning_rate": 0.2},
    "repeats": 1,
    "sweep": [0.0, 10.0],
}


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "label_delta.json"
    path.write_text(json.dumps(_SMALL))
    return path


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


def _printed_config(output: str) -> dict[str, Any]:
    return json.loads(output[output.index("{") :])


@pytest.mark.integration
class TestExperimentRun:
    def test_writes_three_files(self, tmp_path: Path, config_file: Path) -> None:
        out = tmp_path / "results"
        result = runner.invoke(
            app, ["experiment", "run", "label_delta", "-c", str(config_file), "-o", str(out)]
        )
        assert result.exit_code == 0
        assert sorted(p.name for p in out.iterdir()) == [
            "label_delta_audit.jsonl",
            "label_delta_raw.csv",
            "label_delta_summary.csv",
        ]
        raw = (out / "label_delta_raw.csv").read_text().splitlines()
        assert raw[0] == "experiment,param,condition,repeat,fold,accuracy"
        assert len(raw) == 1 + 2 * 2
        summary = (out / "label_delta_summary.csv").read_text().splitlines()
        assert [line.split(",")[1:3] for line in summary[1:]] == [
            ["0", "leaky"],
            ["0", "clean"],
            ["10", "leaky"],
            ["10", "clean"],
        ]

    def test_rerun_is_byte_identical(self, tmp_path: Path, config_file: Path) -> None:
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            args = ["experiment", "run", "label_delta", "-c", str(config_file), "-o", str(out)]
            assert runner.invoke(app, args).exit_code == 0
            outputs.append((out / "label_delta_raw.csv").read_bytes())
        assert outputs[0] == outputs[1]


class TestExperimentConfig:
    def test_unknown_experiment_exits_two(self, tmp_path: Path) -> None:
        result = runner.invoke(app, ["experiment", "run", "nonsense", "-o", str(tmp_path)])
        assert result.exit_code == 2
        assert "unknown experiment" in result.output

    def test_invalid_config_exits_two(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"sweep": [1.0, 0.0]}))
        result = runner.invoke(app, ["experiment", "run", "label_delta", "-c", str(path)])
        assert result.exit_code == 2

    def test_negative_seed_exits_two(self) -> None:
        result = runner.invoke(app, ["experiment", "run", "label_delta", "--seed", "-1"])
        assert result.exit_code == 2

    def test_print_config(self, config_file: Path) -> None:
        args = ["experiment", "run", "label_delta", "-c", str(config_file), "-s", "4", "-r", "6"]
        result = runner.invoke(app, [*args, "--print-config"])
        assert result.exit_code == 0
        printed = _printed_config(result.output)
        assert printed["kind"] == "label_delta"
        assert printed["seed"] == 4
        assert printed["repeats"] == 6
        assert printed["sweep"] == [0.0, 10.0]

    def test_env_seed_shows_in_config(
        self, config_file: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv(SEED_ENV_VAR, "123")
        args = ["experiment", "run", "label_delta", "-c", str(config_file), "--print-config"]
        result = runner.invoke(app, args)
        assert result.exit_code == 0
        assert _printed_config(result.output)["seed"] == 123

    def test_bad_env_seed_exits_two(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv(SEED_ENV_VAR, "twelve")
        result = runner.invoke(app, ["experiment", "run", "label_delta", "--print-config"])
        assert result.exit_code == 2


class TestExperimentFailures:
    def test_divergence_exits_three(self, tmp_path: Path, config_file: Path) -> None:
        args = ["experiment", "run", "label_delta", "-c", str(config_file), "-o", str(tmp_path)]
        with patch("cli.commands.experiment.run_experiment") as mock_run:
            mock_run.side_effect = DivergenceError(epoch=3, loss=float("nan"))
            result = runner.invoke(app, args)
        assert result.exit_code == 3
        assert "diverged at epoch 3" in result.output
        assert list(tmp_path.glob("*.csv")) == []

    def test_broken_audit_expectation_exits_three(
        self, tmp_path: Path, config_file: Path
    ) -> None:
        args = ["experiment", "run", "label_delta", "-c", str(config_file), "-o", str(tmp_path)]
        error = AuditInvariantError("label_delta:0:clean:r0:f0", "no violations", [object()])
        with patch("cli.commands.experiment.run_experiment", side_effect=error):
            result = runner.invoke(app, args)
        assert result.exit_code == 3
