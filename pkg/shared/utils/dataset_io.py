"""CSV serialization for datasets.

Layout: ``f0..f{d-1},label,source_id,time_index,group_id,provenance_id``. Empty
cells stand for missing feature values or absent metadata. Floats are rendered
with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from shared.errors import ConfigError
from shared.models.dataset import ABSENT, Dataset, Metadata
from shared.utils.atomic import atomic_write_text

_META_HEADER = ["label", "source_id", "time_index", "group_id", "provenance_id"]


def _format_float(value: float) -> str:
    return format(value, ".17g")


def dataset_to_csv(ds: Dataset) -> str:
    """Render ``ds`` as CSV text."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"f{j}" for j in range(ds.n_features)] + _META_HEADER)
    meta = ds.meta
    columns = [meta.column(name) for name in ("source_id", "time_index", "group_id")]
    for i in range(ds.n_rows):
        row = ["" if np.isnan(v) else _format_float(float(v)) for v in ds.features[i]]
        row.append(str(int(ds.labels[i])))
        row.extend("" if int(col[i]) == ABSENT else str(int(col[i])) for col in columns)
        row.append(str(int(meta.provenance_id[i])))
        writer.writerow(row)
    return buffer.getvalue()


def write_csv(ds: Dataset, path: Path | str) -> Path:
    """Atomically write ``ds`` to ``path``."""
    return atomic_write_text(path, dataset_to_csv(ds))


def _parse_int(cell: str, line: int, column: str, required: bool) -> int:
    if cell == "":
        if required:
            raise ConfigError(f"line {line}: {column} is required")
        return ABSENT
    try:
        return int(cell)
    except ValueError as e:
        raise ConfigError(f"line {line}: {column} is not an integer: {cell!r}") from e


def dataset_from_csv(text: str) -> Dataset:
    """Parse CSV text produced by :func:`dataset_to_csv`.

    Raises:
        ConfigError: On a malformed header or cell, naming the line.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration as e:
        raise ConfigError("line 1: empty CSV document") from e

    if header[-len(_META_HEADER) :] != _META_HEADER:
        raise ConfigError(f"line 1: header must end with {','.join(_META_HEADER)}")
    d = len(header) - len(_META_HEADER)
    if header[:d] != [f"f{j}" for j in range(d)]:
        raise ConfigError("line 1: feature columns must be named f0..f{d-1}")

    features: list[list[float]] = []
    labels: list[int] = []
    meta_cols: dict[str, list[int]] = {name: [] for name in _META_HEADER[1:]}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ConfigError(f"line {line_no}: expected {len(header)} cells, got {len(row)}")
        values: list[float] = []
        for j, cell in enumerate(row[:d]):
            if cell == "":
                values.append(float("nan"))
                continue
            try:
                values.append(float(cell))
            except ValueError as e:
                raise ConfigError(f"line {line_no}: f{j} is not a number: {cell!r}") from e
        features.append(values)
        labels.append(_parse_int(row[d], line_no, "label", required=True))
        for offset, name in enumerate(_META_HEADER[1:], start=1):
            meta_cols[name].append(
                _parse_int(row[d + offset], line_no, name, required=name == "provenance_id")
            )

    matrix = np.array(features, dtype=np.float64).reshape(len(features), d)
    meta = Metadata(
        provenance_id=np.array(meta_cols["provenance_id"], dtype=np.int64),
        source_id=np.array(meta_cols["source_id"], dtype=np.int64),
        time_index=np.array(meta_cols["time_index"], dtype=np.int64),
        group_id=np.array(meta_cols["group_id"], dtype=np.int64),
    )
    return Dataset(features=matrix, labels=np.array(labels, dtype=np.int64), meta=meta)


def read_csv(path: Path | str) -> Dataset:
    with open(path, encoding="utf-8") as f:
        return dataset_from_csv(f.read())
