"""Experiment report files.

For experiment ``<kind>`` the writer produces, in one output directory:

- ``<kind>_raw.csv``      ``experiment,param,condition,repeat,fold,accuracy``
- ``<kind>_summary.csv``  ``experiment,param,condition,mean,std``
- ``<kind>_audit.jsonl``  one audit record per line, every run in order

Floats are written with 10 significant digits. Every file is written
atomically, so a rerun with the same config and seed reproduces them byte for
byte.
"""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path

from lab.models.audit import logs_to_jsonl
from lab.models.experiment import TrendSeries
from shared.utils.atomic import atomic_write_text

logger = logging.getLogger(__name__)

RAW_HEADER = ["experiment", "param", "condition", "repeat", "fold", "accuracy"]
SUMMARY_HEADER = ["experiment", "param", "condition", "mean", "std"]


def format_float(value: float) -> str:
    return format(value, ".10g")


def _render(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def raw_csv(series: TrendSeries) -> str:
    rows = [
        [
            r.experiment,
            format_float(r.param),
            r.condition,
            str(r.repeat),
            str(r.fold),
            format_float(r.accuracy),
        ]
        for r in series.raw
    ]
    return _render(RAW_HEADER, rows)


def summary_csv(series: TrendSeries) -> str:
    rows = [
        [
            series.experiment,
            format_float(p.param),
            p.condition,
            format_float(p.mean),
            format_float(p.std),
        ]
        for p in series.points()
    ]
    return _render(SUMMARY_HEADER, rows)


class ReportWriter:
    """Writes the raw, summary and audit files of experiment runs."""

    def __init__(self, output_dir: Path | str):
        self.output_dir = Path(output_dir)

    def paths(self, experiment: str) -> dict[str, Path]:
        return {
            "raw": self.output_dir / f"{experiment}_raw.csv",
            "summary": self.output_dir / f"{experiment}_summary.csv",
            "audit": self.output_dir / f"{experiment}_audit.jsonl",
        }

    def write(self, series: TrendSeries) -> dict[str, Path]:
        """Write all three files for ``series``.

        Returns:
            Mapping of ``raw``, ``summary`` and ``audit`` to the written paths.
        """
        paths = self.paths(series.experiment)
        atomic_write_text(paths["raw"], raw_csv(series))
        atomic_write_text(paths["summary"], summary_csv(series))
        atomic_write_text(paths["audit"], logs_to_jsonl(series.audits))
        logger.info(f"Wrote {series.experiment} reports to {self.output_dir}")
        return paths
