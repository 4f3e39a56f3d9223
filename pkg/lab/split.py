"""Split strategies: safe ones that keep train and eval disjoint, and leaky ones
that deliberately do not.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Literal

import numpy as np

from shared.errors import ClassCoverageError, ConfigError, InsufficientDataError, MetadataError
from shared.models.dataset import ABSENT, Dataset, SplitPair

logger = logging.getLogger(__name__)

GroupAxis = Literal["group", "source"]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _check_fraction(fraction: float) -> None:
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"eval_fraction must lie in (0, 1), got {fraction}")


def largest_remainder(total: int, weights: list[int]) -> list[int]:
    """Split ``total`` proportionally to ``weights``; leftovers go to the largest remainders."""
    weight_sum = sum(weights)
    exact = [total * w / weight_sum for w in weights]
    alloc = [int(math.floor(e)) for e in exact]
    order = sorted(range(len(weights)), key=lambda i: (-(exact[i] - alloc[i]), i))
    for i in order[: total - sum(alloc)]:
        alloc[i] += 1
    return alloc


def stratified_sample(
    labels: np.ndarray, candidates: np.ndarray, size: int, rng: np.random.Generator
) -> np.ndarray:
    """``size`` rows of ``candidates`` keeping the class ratio within one row per class."""
    classes = [candidates[labels[candidates] == c] for c in (0, 1)]
    alloc = largest_remainder(size, [len(c) for c in classes])
    picked = [
        rng.permutation(members)[:count] for members, count in zip(classes, alloc, strict=True)
    ]
    return np.sort(np.concatenate(picked))


def holdout(ds: Dataset, eval_fraction: float, stratified: bool, seed: int) -> SplitPair:
    """Disjoint train/eval split with ``round(eval_fraction·n)`` eval rows (halves round up)."""
    _check_fraction(eval_fraction)
    n = ds.n_rows
    n_eval = _round_half_up(eval_fraction * n)
    if n_eval == 0 or n_eval == n:
        raise InsufficientDataError(
            f"eval_fraction={eval_fraction} on {n} rows leaves one side of the split empty"
        )
    rng = np.random.default_rng(seed)
    if stratified:
        zeros, ones = ds.class_counts()
        if zeros == 0 or ones == 0:
            raise ClassCoverageError("stratified holdout needs both classes")
        eval_idx = stratified_sample(ds.labels, np.arange(n), n_eval, rng)
    else:
        eval_idx = np.sort(rng.permutation(n)[:n_eval])
    train_idx = np.setdiff1d(np.arange(n), eval_idx)
    return SplitPair(train_idx, eval_idx, strategy="holdout")


@dataclass(frozen=True, eq=False)
class FoldSet:
    """Partition of row indices into k folds."""

    folds: tuple[np.ndarray, ...]
    stratified: bool
    seed: int

    def __len__(self) -> int:
        return len(self.folds)

    def pairs(self) -> Iterator[SplitPair]:
        """One SplitPair per fold: that fold for eval, the rest for training."""
        for i, fold in enumerate(self.folds):
            others = [f for j, f in enumerate(self.folds) if j != i]
            train = np.sort(np.concatenate(others)) if others else np.empty(0, dtype=np.int64)
            yield SplitPair(train, fold, strategy="kfold", notes={"fold": str(i)})


def kfold_stratified(ds: Dataset, k: int, seed: int, stratified: bool = True) -> FoldSet:
    """Shuffle rows (per class when stratified) and deal them round-robin into ``k`` folds."""
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    if k > ds.n_rows:
        raise InsufficientDataError(f"cannot make {k} folds from {ds.n_rows} rows")
    rng = np.random.default_rng(seed)
    if stratified:
        order_parts = []
        for c in (0, 1):
            members = np.flatnonzero(ds.labels == c)
            if 0 < members.size < k:
                raise InsufficientDataError(
                    f"class {c} has {members.size} rows, fewer than k={k} folds"
                )
            order_parts.append(rng.permutation(members))
        order = np.concatenate(order_parts)
    else:
        order = rng.permutation(ds.n_rows)
    folds = tuple(np.sort(order[i::k]) for i in range(k))
    return FoldSet(folds=folds, stratified=stratified, seed=seed)


def sample_with_replacement_split(ds: Dataset, eval_fraction: float, seed: int) -> SplitPair:
    """Draw train and eval independently from all rows, so they usually intersect.

    Each side is a uniform draw of distinct rows; nothing keeps a row drawn for
    one side out of the other.
    """
    _check_fraction(eval_fraction)
    n = ds.n_rows
    if n == 0:
        raise InsufficientDataError("cannot split an empty dataset")
    n_eval_nominal = _round_half_up(eval_fraction * n)
    n_eval = max(1, n_eval_nominal)
    n_train = max(1, n - n_eval_nominal)
    rng = np.random.default_rng(seed)
    eval_idx = np.sort(rng.choice(n, size=n_eval, replace=False))
    train_idx = np.sort(rng.choice(n, size=n_train, replace=False))
    pair = SplitPair(train_idx, eval_idx, strategy="with_replacement", leaky=True)
    logger.debug(f"Reintroduction split shares {pair.shared_indices().size} rows")
    return pair


def _id_column(ds: Dataset, axis: GroupAxis) -> np.ndarray:
    name = "group_id" if axis == "group" else "source_id"
    if not ds.meta.has(name):
        raise MetadataError(f"{name} must be present on every row")
    return ds.meta.column(name)


def group_split(ds: Dataset, held_out: int, axis: GroupAxis = "group") -> SplitPair:
    """All rows of ``held_out`` for eval, every other id for training."""
    ids = _id_column(ds, axis)
    present = np.unique(ids)
    if present.size < 2:
        raise InsufficientDataError(f"group split needs at least two {axis} ids")
    if held_out == ABSENT or held_out not in present:
        raise ConfigError(f"{axis} id {held_out} does not occur in the dataset")
    eval_idx = np.flatnonzero(ids == held_out)
    train_idx = np.flatnonzero(ids != held_out)
    return SplitPair(train_idx, eval_idx, strategy=f"{axis}_split")


def temporal_split(ds: Dataset, cut_time: int) -> SplitPair:
    """Rows before ``cut_time`` for training; rows at or after it for eval."""
    if not ds.meta.has("time_index"):
        raise MetadataError("temporal split needs time_index on every row")
    times = ds.meta.column("time_index")
    train_idx = np.flatnonzero(times < cut_time)
    eval_idx = np.flatnonzero(times >= cut_time)
    if train_idx.size == 0:
        raise InsufficientDataError(f"no rows before cut_time={cut_time}")
    if eval_idx.size == 0:
        raise InsufficientDataError(f"no rows at or after cut_time={cut_time}")
    return SplitPair(train_idx, eval_idx, strategy="temporal")


def contamination_count(n_eval: int, fraction: float) -> int:
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"contamination fraction must lie in [0, 1], got {fraction}")
    return int(math.floor(fraction * n_eval + 1e-9))


def contamination_indices(n_eval: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """``floor(fraction·n_eval)`` distinct eval positions, chosen uniformly."""
    count = contamination_count(n_eval, fraction)
    return np.sort(rng.choice(n_eval, size=count, replace=False))


def contaminate(train: Dataset, eval_ds: Dataset, fraction: float, seed: int) -> Dataset:
    """``train`` plus exact copies of ``floor(fraction·|eval|)`` eval rows."""
    idx = contamination_indices(eval_ds.n_rows, fraction, np.random.default_rng(seed))
    if idx.size == 0:
        return train
    return Dataset.concat([train, eval_ds.take(idx)])
