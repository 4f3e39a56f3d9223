"""Tests for safe and leaky split strategies."""

from __future__ import annotations

import numpy as np
import pytest

from lab.split import (
    contaminate,
    contamination_count,
    group_split,
    holdout,
    kfold_stratified,
    largest_remainder,
    sample_with_replacement_split,
    temporal_split,
)
from shared.errors import (
    ClassCoverageError,
    ConfigError,
    InsufficientDataError,
    MetadataError,
)
from shared.models.dataset import Dataset
from shared.utils.duplicates import exact_duplicate_pairs


def _make_dataset(n: int = 100, ones: int = 30, **meta: object) -> Dataset:
    labels = np.zeros(n, dtype=np.int64)
    labels[:ones] = 1
    features = np.arange(n, dtype=np.float64).reshape(-1, 1)
    return Dataset.from_arrays(features, labels, **meta)  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# Holdout and k-fold
# ---------------------------------------------------------------------------


class TestHoldout:
    def test_partition_and_size(self) -> None:
        pair = holdout(_make_dataset(), 0.25, stratified=True, seed=1)
        assert pair.eval_indices.size == 25
        assert np.intersect1d(pair.train_indices, pair.eval_indices).size == 0
        assert np.union1d(pair.train_indices, pair.eval_indices).size == 100

    def test_stratified_ratio(self) -> None:
        ds = _make_dataset()
        pair = holdout(ds, 0.2, stratified=True, seed=5)
        assert int(ds.labels[pair.eval_indices].sum()) == 6

    def test_half_rounds_up(self) -> None:
        pair = holdout(_make_dataset(n=10, ones=5), 0.25, stratified=False, seed=0)
        assert pair.eval_indices.size == 3

    def test_deterministic(self) -> None:
        a = holdout(_make_dataset(), 0.3, True, seed=9)
        b = holdout(_make_dataset(), 0.3, True, seed=9)
        assert np.array_equal(a.eval_indices, b.eval_indices)

    def test_fraction_bounds(self) -> None:
        with pytest.raises(ConfigError):
            holdout(_make_dataset(), 1.0, True, seed=0)

    def test_empty_side(self) -> None:
        with pytest.raises(InsufficientDataError):
            holdout(_make_dataset(n=2, ones=1), 0.1, False, seed=0)

    def test_single_class_stratified(self) -> None:
        with pytest.raises(ClassCoverageError):
            holdout(_make_dataset(ones=0), 0.2, True, seed=0)


class TestKfold:
    def test_folds_partition_rows(self) -> None:
        folds = kfold_stratified(_make_dataset(), 5, seed=2)
        everything = np.concatenate(folds.folds)
        assert np.array_equal(np.sort(everything), np.arange(100))
        assert [f.size for f in folds.folds] == [20] * 5

    def test_stratified_fold_ratio(self) -> None:
        ds = _make_dataset()
        for fold in kfold_stratified(ds, 5, seed=2).folds:
            assert int(ds.labels[fold].sum()) == 6

    def test_pairs_leave_one_fold_out(self) -> None:
        pairs = list(kfold_stratified(_make_dataset(), 4, seed=0).pairs())
        assert len(pairs) == 4
        for pair in pairs:
            assert np.intersect1d(pair.train_indices, pair.eval_indices).size == 0
            assert pair.train_indices.size + pair.eval_indices.size == 100

    def test_class_smaller_than_k(self) -> None:
        with pytest.raises(InsufficientDataError):
            kfold_stratified(_make_dataset(n=20, ones=2), 5, seed=0)

    def test_k_at_least_two(self) -> None:
        with pytest.raises(ConfigError):
            kfold_stratified(_make_dataset(), 1, seed=0)


def test_largest_remainder() -> None:
    assert largest_remainder(7, [1, 1, 1]) == [3, 2, 2]
    assert sum(largest_remainder(20, [70, 30])) == 20


# ---------------------------------------------------------------------------
# Leaky and metadata-driven splits
# ---------------------------------------------------------------------------


class TestWithReplacement:
    def test_sides_overlap_and_marked_leaky(self) -> None:
        pair = sample_with_replacement_split(_make_dataset(), 0.5, seed=3)
        assert pair.leaky
        assert pair.eval_indices.size == 50
        assert pair.train_indices.size == 50
        assert pair.shared_indices().size > 0


class TestGroupSplit:
    def test_held_out_group(self) -> None:
        ds = _make_dataset(group_id=np.arange(100) % 4)
        pair = group_split(ds, 2)
        groups = ds.meta.column("group_id")
        assert set(groups[pair.eval_indices].tolist()) == {2}
        assert 2 not in set(groups[pair.train_indices].tolist())

    def test_source_axis(self) -> None:
        ds = _make_dataset(source_id=np.arange(100) // 50)
        pair = group_split(ds, 1, axis="source")
        assert pair.eval_indices.tolist() == list(range(50, 100))

    def test_missing_metadata(self) -> None:
        with pytest.raises(MetadataError):
            group_split(_make_dataset(), 0)

    def test_unknown_group(self) -> None:
        with pytest.raises(ConfigError):
            group_split(_make_dataset(group_id=np.arange(100) % 2), 7)


class TestTemporalSplit:
    def test_cut(self) -> None:
        ds = _make_dataset(time_index=np.arange(100))
        pair = temporal_split(ds, 80)
        assert pair.train_indices.max() == 79
        assert pair.eval_indices.min() == 80

    def test_empty_side(self) -> None:
        with pytest.raises(InsufficientDataError):
            temporal_split(_make_dataset(time_index=np.arange(100)), 0)


class TestContamination:
    @pytest.mark.parametrize(("fraction", "expected"), [(0.0, 0), (0.1, 2), (0.3, 6), (1.0, 20)])
    def test_count_is_floor(self, fraction: float, expected: int) -> None:
        assert contamination_count(20, fraction) == expected

    def test_contaminate_adds_exact_copies(self) -> None:
        ds = _make_dataset()
        train, eval_ds = ds.take(range(80)), ds.take(range(80, 100))
        polluted = contaminate(train, eval_ds, 0.5, seed=1)
        assert polluted.n_rows == 90
        assert len(exact_duplicate_pairs(polluted, eval_ds)) == 10

    def test_zero_fraction_returns_train(self) -> None:
        ds = _make_dataset()
        train = ds.take(range(80))
        assert contaminate(train, ds.take(range(80, 100)), 0.0, seed=1) is train

    def test_fraction_range(self) -> None:
        with pytest.raises(ConfigError):
            contamination_count(10, 1.5)
