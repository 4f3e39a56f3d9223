"""Exact-duplicate detection between datasets.

Two rows are duplicates when their feature vectors are bitwise equal in every
column. Labels and metadata do not take part in the comparison.
"""

from __future__ import annotations

import logging
from collections import defaultdict

import numpy as np

from shared.errors import DimensionError
from shared.models.dataset import Dataset

logger = logging.getLogger(__name__)


def _check_widths(a: Dataset, b: Dataset) -> None:
    if a.n_features != b.n_features:
        raise DimensionError(
            f"cannot compare datasets with {a.n_features} and {b.n_features} columns"
        )


def _row_keys(ds: Dataset) -> list[bytes]:
    contiguous = np.ascontiguousarray(ds.features)
    return [row.tobytes() for row in contiguous]


def exact_duplicate_pairs(a: Dataset, b: Dataset) -> set[tuple[int, int]]:
    """Every ``(row_in_a, row_in_b)`` pair with bitwise-equal feature vectors.

    Raises:
        DimensionError: If the column counts differ.
    """
    _check_widths(a, b)
    index: dict[bytes, list[int]] = defaultdict(list)
    for j, key in enumerate(_row_keys(b)):
        index[key].append(j)

    pairs: set[tuple[int, int]] = set()
    for i, key in enumerate(_row_keys(a)):
        for j in index.get(key, ()):
            pairs.add((i, j))
    return pairs


def duplicate_mask(train: Dataset, eval_ds: Dataset) -> np.ndarray:
    """Boolean mask over ``eval_ds`` rows that duplicate some ``train`` row."""
    _check_widths(train, eval_ds)
    seen = set(_row_keys(train))
    return np.array([key in seen for key in _row_keys(eval_ds)], dtype=bool)


def dedup_eval(train: Dataset, eval_ds: Dataset) -> Dataset:
    """Drop eval rows that exactly duplicate a training row, keeping survivor order.

    An empty result is legal.
    """
    mask = duplicate_mask(train, eval_ds)
    if mask.any():
        logger.debug(f"Removing {int(mask.sum())} duplicated eval rows of {eval_ds.n_rows}")
    return eval_ds.take(np.flatnonzero(~mask))


def provenance_overlap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sorted provenance ids present in both arrays."""
    return np.intersect1d(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
