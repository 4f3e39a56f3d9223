"""Core data model: datasets, per-row metadata and split pairs.

Every array held by these types is copied at construction and frozen
(``writeable=False``), so values can be shared between concurrent workers.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from shared.errors import ConfigError, DimensionError, SplitIndexError

ABSENT = -1
"""Sentinel for an absent optional metadata value (ids are non-negative)."""

META_COLUMNS = ("source_id", "time_index", "group_id", "provenance_id")


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


def _int_column(values: Iterable[int] | np.ndarray | None, n: int, name: str) -> np.ndarray:
    if values is None:
        return _frozen(np.full(n, ABSENT, dtype=np.int64))
    arr = np.array(values, dtype=np.int64, copy=True).reshape(-1)
    if arr.shape[0] != n:
        raise DimensionError(f"{name} has {arr.shape[0]} entries, expected {n}")
    if arr.size and int(arr.min()) < ABSENT:
        raise ConfigError(f"{name} must be non-negative (or {ABSENT} for absent)")
    return _frozen(arr)


def _as_index_array(indices: Iterable[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(indices)
    if arr.dtype == bool:
        arr = np.flatnonzero(arr)
    return np.array(arr, dtype=np.int64, copy=True).reshape(-1)


@dataclass(frozen=True, eq=False)
class Metadata:
    """Columnar per-row metadata.

    ``provenance_id`` identifies the original instance a row descends from and is
    shared by every exact copy of it. The other columns are optional per row;
    ``ABSENT`` marks a missing value.
    """

    provenance_id: np.ndarray
    source_id: np.ndarray | None = None
    time_index: np.ndarray | None = None
    group_id: np.ndarray | None = None

    def __post_init__(self) -> None:
        prov = np.array(self.provenance_id, dtype=np.int64, copy=True).reshape(-1)
        if prov.size and int(prov.min()) < 0:
            raise ConfigError("provenance_id must be non-negative on every row")
        n = prov.shape[0]
        object.__setattr__(self, "provenance_id", _frozen(prov))
        object.__setattr__(self, "source_id", _int_column(self.source_id, n, "source_id"))
        object.__setattr__(self, "time_index", _int_column(self.time_index, n, "time_index"))
        object.__setattr__(self, "group_id", _int_column(self.group_id, n, "group_id"))

    @classmethod
    def fresh(
        cls,
        n: int,
        start: int = 0,
        source_id: Iterable[int] | np.ndarray | None = None,
        time_index: Iterable[int] | np.ndarray | None = None,
        group_id: Iterable[int] | np.ndarray | None = None,
    ) -> Metadata:
        """Metadata for ``n`` new rows with provenance ids ``start..start+n-1``."""
        return cls(
            provenance_id=np.arange(start, start + n, dtype=np.int64),
            source_id=source_id,
            time_index=time_index,
            group_id=group_id,
        )

    def __len__(self) -> int:
        return int(self.provenance_id.shape[0])

    def column(self, name: str) -> np.ndarray:
        if name not in META_COLUMNS:
            raise ConfigError(f"unknown metadata column '{name}'")
        values: np.ndarray = getattr(self, name)
        return values

    def has(self, name: str) -> bool:
        """True when ``name`` is present on every row (vacuously true when empty)."""
        return bool(np.all(self.column(name) != ABSENT))

    def take(self, indices: np.ndarray) -> Metadata:
        return Metadata(
            provenance_id=self.provenance_id[indices],
            source_id=self.column("source_id")[indices],
            time_index=self.column("time_index")[indices],
            group_id=self.column("group_id")[indices],
        )

    @staticmethod
    def concat(parts: Sequence[Metadata]) -> Metadata:
        return Metadata(
            provenance_id=np.concatenate([p.provenance_id for p in parts]),
            source_id=np.concatenate([p.column("source_id") for p in parts]),
            time_index=np.concatenate([p.column("time_index") for p in parts]),
            group_id=np.concatenate([p.column("group_id") for p in parts]),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix, binary labels and per-row metadata.

    Missing cells hold NaN in ``features`` and True in ``missing_mask``; the two
    are reconciled at construction. ``missing_mask`` is None when nothing is
    missing.
    """

    features: np.ndarray
    labels: np.ndarray
    meta: Metadata
    missing_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64, copy=True)
        if features.ndim != 2:
            raise DimensionError(f"features must be a 2-D matrix, got {features.ndim}-D")
        labels = np.array(self.labels, copy=True).reshape(-1)
        if labels.size and not np.all(np.isin(labels, (0, 1))):
            raise ConfigError("labels must contain only 0 or 1")
        labels = labels.astype(np.int64)
        if labels.shape[0] != features.shape[0]:
            raise DimensionError(
                f"features have {features.shape[0]} rows but labels have {labels.shape[0]}"
            )
        if len(self.meta) != features.shape[0]:
            raise DimensionError(
                f"metadata has {len(self.meta)} rows, expected {features.shape[0]}"
            )

        mask = np.isnan(features)
        if self.missing_mask is not None:
            given = np.array(self.missing_mask, dtype=bool, copy=True)
            if given.shape != features.shape:
                raise DimensionError(
                    f"missing_mask shape {given.shape} differs from features {features.shape}"
                )
            mask |= given
            features[mask] = np.nan

        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "missing_mask", _frozen(mask) if mask.any() else None)

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    @classmethod
    def from_arrays(
        cls,
        features: np.ndarray | Sequence[Sequence[float]],
        labels: np.ndarray | Sequence[int],
        provenance_start: int = 0,
        source_id: Iterable[int] | np.ndarray | None = None,
        time_index: Iterable[int] | np.ndarray | None = None,
        group_id: Iterable[int] | np.ndarray | None = None,
    ) -> Dataset:
        """Build a dataset with fresh, consecutive provenance ids."""
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(-1, 1)
        meta = Metadata.fresh(
            feats.shape[0],
            start=provenance_start,
            source_id=source_id,
            time_index=time_index,
            group_id=group_id,
        )
        return cls(features=feats, labels=np.asarray(labels), meta=meta)

    @classmethod
    def concat(cls, parts: Sequence[Dataset]) -> Dataset:
        """Stack datasets row-wise; provenance ids are carried over unchanged."""
        if not parts:
            raise ConfigError("cannot concatenate an empty sequence of datasets")
        width = parts[0].n_features
        for part in parts[1:]:
            if part.n_features != width:
                raise DimensionError(
                    f"cannot concatenate datasets with {width} and {part.n_features} columns"
                )
        return cls(
            features=np.vstack([p.features for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            meta=Metadata.concat([p.meta for p in parts]),
        )

    # ------------------------------------------------------------------
    # Shape and accessors
    # ------------------------------------------------------------------

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def provenance(self) -> np.ndarray:
        return self.meta.provenance_id

    def __len__(self) -> int:
        return self.n_rows

    def has_missing(self) -> bool:
        return self.missing_mask is not None

    def max_provenance(self) -> int:
        return int(self.provenance.max()) if self.n_rows else -1

    def class_counts(self) -> tuple[int, int]:
        ones = int(self.labels.sum())
        return self.n_rows - ones, ones

    # ------------------------------------------------------------------
    # Derivations (all return new datasets)
    # ------------------------------------------------------------------

    def take(self, indices: Iterable[int] | np.ndarray) -> Dataset:
        """Rows at ``indices`` in the given order; copies keep their provenance."""
        idx = _as_index_array(indices)
        if idx.size and (int(idx.min()) < 0 or int(idx.max()) >= self.n_rows):
            raise SplitIndexError(f"row index out of range for dataset of {self.n_rows} rows")
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            meta=self.meta.take(idx),
        )

    def with_features(self, features: np.ndarray) -> Dataset:
        """Same rows, labels and metadata with a replacement feature matrix."""
        return Dataset(features=features, labels=self.labels, meta=self.meta)

    def append_column(self, column: np.ndarray) -> Dataset:
        col = np.asarray(column, dtype=np.float64).reshape(-1, 1)
        if col.shape[0] != self.n_rows:
            raise DimensionError(f"column has {col.shape[0]} rows, expected {self.n_rows}")
        return self.with_features(np.hstack([self.features, col]))


@dataclass(frozen=True, eq=False)
class SplitPair:
    """Train/eval index sets into one dataset plus a construction record.

    Disjointness is not enforced here: leaky strategies produce overlapping
    sets on purpose and mark themselves with ``leaky=True``.
    """

    train_indices: np.ndarray
    eval_indices: np.ndarray
    strategy: str = "holdout"
    leaky: bool = False
    notes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("train_indices", "eval_indices"):
            arr = _as_index_array(getattr(self, name))
            if arr.size and int(arr.min()) < 0:
                raise SplitIndexError(f"{name} contains a negative index")
            if np.unique(arr).size != arr.size:
                raise ConfigError(f"{name} contains repeated indices")
            object.__setattr__(self, name, _frozen(arr))

    def validate_for(self, ds: Dataset) -> None:
        """Raise SplitIndexError when any index falls outside ``ds``."""
        for name in ("train_indices", "eval_indices"):
            arr: np.ndarray = getattr(self, name)
            if arr.size and int(arr.max()) >= ds.n_rows:
                raise SplitIndexError(
                    f"{name} refers to row {int(arr.max())} of a {ds.n_rows}-row dataset"
                )

    def shared_indices(self) -> np.ndarray:
        return np.intersect1d(self.train_indices, self.eval_indices)
