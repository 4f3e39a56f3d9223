"""SMOTE oversampling and cluster-centroid undersampling.

Both resamplers learn only from ``allowed_rows``. Every synthetic row records
the provenance ids of the rows it was built from, so an audit can tell whether
evaluation rows fed the generator.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from shared.errors import ConfigError, InsufficientDataError, PreconditionError, SplitIndexError
from shared.models.dataset import ABSENT, Dataset, Metadata

logger = logging.getLogger(__name__)

MAX_KMEANS_ITERATIONS = 100


@dataclass(frozen=True, eq=False)
class ResampleReport:
    """Output of one resampling run.

    Attributes:
        generated: Synthetic rows only, with fresh provenance ids.
        donors: Per generated row, the provenance ids it was built from.
        removed: Row indices of the input that the resampler replaces.
        method: ``smote`` or ``centroid``.
    """

    generated: Dataset
    donors: tuple[tuple[int, ...], ...]
    removed: np.ndarray
    method: str

    def __post_init__(self) -> None:
        if len(self.donors) != self.generated.n_rows:
            raise ConfigError("every generated row needs a donor list")
        if any(len(d) == 0 for d in self.donors):
            raise ConfigError("donor lists must be nonempty")

    def donor_provenance(self) -> np.ndarray:
        """Sorted union of all donor provenance ids."""
        if not self.donors:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate([np.asarray(d, dtype=np.int64) for d in self.donors]))


def _allowed(ds: Dataset, allowed_rows: Iterable[int] | np.ndarray) -> np.ndarray:
    idx = np.unique(np.fromiter(allowed_rows, dtype=np.int64))
    if idx.size and (int(idx[0]) < 0 or int(idx[-1]) >= ds.n_rows):
        raise SplitIndexError(f"allowed_rows out of range for dataset of {ds.n_rows} rows")
    return idx


def _empty_like(ds: Dataset) -> Dataset:
    return Dataset(
        features=np.empty((0, ds.n_features)),
        labels=np.empty(0, dtype=np.int64),
        meta=Metadata.fresh(0),
    )


def smote(
    ds: Dataset,
    minority_class: int,
    k: int,
    n_new: int,
    allowed_rows: Iterable[int] | np.ndarray,
    seed: int,
) -> ResampleReport:
    """Generate ``n_new`` minority rows by interpolating between neighbours.

    Each synthetic row is ``x_i + λ·(x_nb − x_i)`` with ``λ ~ U[0, 1]``, ``x_i``
    a uniformly chosen minority row of ``allowed_rows`` and ``x_nb`` one of its
    ``k`` nearest minority neighbours there (Euclidean, ties to the lower index).

    Raises:
        InsufficientDataError: Fewer than ``k + 1`` minority rows are allowed.
    """
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if n_new < 0:
        raise ConfigError(f"n_new must be non-negative, got {n_new}")
    allowed = _allowed(ds, allowed_rows)
    minority = allowed[ds.labels[allowed] == minority_class]
    if minority.size < k + 1:
        raise InsufficientDataError(
            f"SMOTE with k={k} needs {k + 1} minority rows, {minority.size} allowed"
        )
    if n_new == 0:
        return ResampleReport(_empty_like(ds), (), np.empty(0, dtype=np.int64), "smote")

    x = ds.features[minority]
    if np.isnan(x).any():
        raise PreconditionError("SMOTE cannot interpolate rows with missing values")

    distances = cdist(x, x)
    np.fill_diagonal(distances, np.inf)
    neighbours = np.argsort(distances, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(seed)
    base = rng.integers(0, minority.size, size=n_new)
    partner = neighbours[base, rng.integers(0, k, size=n_new)]
    lam = rng.random(n_new)
    generated = x[base] + lam[:, None] * (x[partner] - x[base])

    rows_base, rows_partner = minority[base], minority[partner]
    provenance = ds.provenance
    donors = tuple(
        (int(provenance[i]), int(provenance[j]))
        for i, j in zip(rows_base, rows_partner, strict=True)
    )
    meta = Metadata.fresh(
        n_new,
        start=ds.max_provenance() + 1,
        source_id=ds.meta.column("source_id")[rows_base],
        group_id=ds.meta.column("group_id")[rows_base],
    )
    logger.debug(f"SMOTE generated {n_new} rows from {minority.size} allowed minority rows")
    return ResampleReport(
        generated=Dataset(
            features=generated, labels=np.full(n_new, minority_class), meta=meta
        ),
        donors=donors,
        removed=np.empty(0, dtype=np.int64),
        method="smote",
    )


def _lloyd(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    assignment = np.full(x.shape[0], -1, dtype=np.int64)
    for _ in range(MAX_KMEANS_ITERATIONS):
        updated = np.argmin(cdist(x, centroids), axis=1)
        if np.array_equal(updated, assignment):
            break
        assignment = updated
        for c in range(centroids.shape[0]):
            members = assignment == c
            if members.any():
                centroids[c] = x[members].mean(axis=0)
    return assignment, centroids


def centroid_undersample(
    ds: Dataset,
    majority_class: int,
    n_clusters: int,
    allowed_rows: Iterable[int] | np.ndarray,
    seed: int,
) -> ResampleReport:
    """Replace the allowed majority rows with ``n_clusters`` k-means centroids.

    Lloyd's algorithm, initialised from distinct rows sampled uniformly,
    stops when assignments stop changing or after 100 iterations. Clusters
    still empty at the end are dropped.
    """
    if n_clusters < 1:
        raise ConfigError(f"n_clusters must be at least 1, got {n_clusters}")
    allowed = _allowed(ds, allowed_rows)
    majority = allowed[ds.labels[allowed] == majority_class]
    if majority.size < n_clusters:
        raise InsufficientDataError(
            f"{n_clusters} clusters need as many majority rows, {majority.size} allowed"
        )
    x = ds.features[majority]
    if np.isnan(x).any():
        raise PreconditionError("k-means cannot cluster rows with missing values")

    rng = np.random.default_rng(seed)
    start = x[rng.choice(majority.size, size=n_clusters, replace=False)].copy()
    assignment, _ = _lloyd(x, start)

    clusters = np.unique(assignment)
    if clusters.size < n_clusters:
        logger.warning(f"Dropped {n_clusters - clusters.size} empty k-means clusters")
    centroids = np.vstack([x[assignment == c].mean(axis=0) for c in clusters])
    provenance = ds.provenance[majority]
    donors = tuple(
        tuple(int(p) for p in provenance[assignment == c]) for c in clusters
    )
    n_out = clusters.size
    meta = Metadata(
        provenance_id=np.arange(ds.max_provenance() + 1, ds.max_provenance() + 1 + n_out),
        source_id=np.full(n_out, ABSENT),
        time_index=np.full(n_out, ABSENT),
        group_id=np.full(n_out, ABSENT),
    )
    return ResampleReport(
        generated=Dataset(
            features=centroids, labels=np.full(n_out, majority_class), meta=meta
        ),
        donors=donors,
        removed=majority,
        method="centroid",
    )


def apply_report(ds: Dataset, report: ResampleReport) -> Dataset:
    """``ds`` without the removed rows, with the generated rows appended."""
    keep = np.setdiff1d(np.arange(ds.n_rows), report.removed)
    return Dataset.concat([ds.take(keep), report.generated])
