"""Tests for Dataset, Metadata and SplitPair."""

from __future__ import annotations

import numpy as np
import pytest

from shared.errors import ConfigError, DimensionError, SplitIndexError
from shared.models.dataset import ABSENT, Dataset, Metadata, SplitPair

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _make_dataset(n: int = 6, d: int = 2) -> Dataset:
    features = np.arange(n * d, dtype=np.float64).reshape(n, d)
    labels = np.array([i % 2 for i in range(n)])
    return Dataset.from_arrays(features, labels)


# ---------------------------------------------------------------------------
# Metadata
# ---------------------------------------------------------------------------


class TestMetadata:
    def test_fresh_assigns_consecutive_provenance(self) -> None:
        meta = Metadata.fresh(3, start=10)
        assert meta.provenance_id.tolist() == [10, 11, 12]
        assert meta.column("group_id").tolist() == [ABSENT] * 3

    def test_has_requires_every_row(self) -> None:
        meta = Metadata.fresh(3, time_index=[0, ABSENT, 2])
        assert not meta.has("time_index")
        assert Metadata.fresh(3, time_index=[0, 1, 2]).has("time_index")

    def test_negative_provenance_rejected(self) -> None:
        with pytest.raises(ConfigError):
            Metadata(provenance_id=np.array([0, -1]))

    def test_column_length_checked(self) -> None:
        with pytest.raises(DimensionError):
            Metadata.fresh(3, source_id=[0, 1])

    def test_unknown_column(self) -> None:
        with pytest.raises(ConfigError):
            Metadata.fresh(1).column("colour")


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


class TestDataset:
    def test_arrays_are_frozen_copies(self) -> None:
        features = np.zeros((2, 2))
        ds = Dataset.from_arrays(features, [0, 1])
        features[0, 0] = 5.0
        assert ds.features[0, 0] == 0.0
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0

    def test_labels_must_be_binary(self) -> None:
        with pytest.raises(ConfigError):
            Dataset.from_arrays([[0.0], [1.0]], [0, 2])

    def test_row_count_mismatch(self) -> None:
        with pytest.raises(DimensionError):
            Dataset.from_arrays([[0.0], [1.0]], [0])

    def test_missing_mask_reconciled_with_nan(self) -> None:
        ds = Dataset.from_arrays([[np.nan, 1.0], [2.0, 3.0]], [0, 1])
        assert ds.has_missing()
        assert ds.missing_mask is not None
        assert ds.missing_mask.tolist() == [[True, False], [False, False]]
        assert not _make_dataset().has_missing()

    def test_take_keeps_provenance_of_copies(self) -> None:
        ds = _make_dataset()
        copy = ds.take([1, 1, 4])
        assert copy.provenance.tolist() == [1, 1, 4]
        assert np.array_equal(copy.features[0], copy.features[1])

    def test_take_out_of_range(self) -> None:
        with pytest.raises(SplitIndexError):
            _make_dataset().take([6])

    def test_concat_checks_width(self) -> None:
        with pytest.raises(DimensionError):
            Dataset.concat([_make_dataset(d=2), _make_dataset(d=3)])

    def test_concat_keeps_provenance(self) -> None:
        a = _make_dataset(n=2)
        b = Dataset.from_arrays(np.ones((2, 2)), [0, 1], provenance_start=2)
        joined = Dataset.concat([a, b])
        assert joined.provenance.tolist() == [0, 1, 2, 3]
        assert joined.max_provenance() == 3

    def test_class_counts(self) -> None:
        assert _make_dataset(n=5).class_counts() == (3, 2)

    def test_append_column(self) -> None:
        ds = _make_dataset().append_column(np.zeros(6))
        assert ds.n_features == 3


# ---------------------------------------------------------------------------
# SplitPair
# ---------------------------------------------------------------------------


class TestSplitPair:
    def test_repeated_index_rejected(self) -> None:
        with pytest.raises(ConfigError):
            SplitPair([0, 0], [1])

    def test_validate_for_range(self) -> None:
        pair = SplitPair([0, 1], [7])
        with pytest.raises(SplitIndexError):
            pair.validate_for(_make_dataset())

    def test_shared_indices(self) -> None:
        pair = SplitPair([0, 1, 2], [2, 3], leaky=True)
        assert pair.shared_indices().tolist() == [2]
