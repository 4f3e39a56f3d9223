"""Two-phase (fit, then apply) preprocessing transforms.

A fit learns :class:`PreprocParams` from exactly the rows it is handed; an
apply transforms any dataset with those parameters and never reads labels.
Leaky and clean pipelines differ only in the rows they pass to fit.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Iterable

import numpy as np
from scipy import stats

from lab.models.params import PreprocKind, PreprocParams
from shared.errors import (
    ClassCoverageError,
    ConfigError,
    DimensionError,
    DonorMissingError,
    InsufficientDataError,
    MetadataError,
)
from shared.models.dataset import Dataset

logger = logging.getLogger(__name__)

EPS = 1e-12


def _check_kind(p: PreprocParams, kind: PreprocKind) -> None:
    if p.kind != kind:
        raise ConfigError(f"expected {kind} params, got {p.kind}")


def _check_width(p: PreprocParams, ds: Dataset) -> None:
    if ds.n_features != p.n_features:
        raise DimensionError(
            f"{p.kind} params were fitted on {p.n_features} columns, dataset has {ds.n_features}"
        )


def _observed_columns(rows: Dataset, what: str) -> None:
    observed = np.sum(~np.isnan(rows.features), axis=0)
    empty = np.flatnonzero(observed == 0)
    if empty.size:
        raise InsufficientDataError(
            f"cannot fit {what}: column(s) {empty.tolist()} have no observed values"
        )


# ---------------------------------------------------------------------------
# Standardization and min-max scaling
# ---------------------------------------------------------------------------


def fit_standardizer(rows: Dataset) -> PreprocParams:
    """Per-column mean and population standard deviation, ignoring missing cells."""
    if rows.n_rows < 2:
        raise InsufficientDataError(f"standardizer needs at least 2 rows, got {rows.n_rows}")
    _observed_columns(rows, "standardizer")
    mu = np.nanmean(rows.features, axis=0)
    sigma = np.nanstd(rows.features, axis=0, ddof=0)
    return PreprocParams(
        kind="standardize",
        n_features=rows.n_features,
        fitted_on=rows.n_rows,
        mu=mu.tolist(),
        sigma=sigma.tolist(),
    )


def apply_standardizer(p: PreprocParams, ds: Dataset) -> Dataset:
    _check_kind(p, "standardize")
    _check_width(p, ds)
    mu = np.asarray(p.mu)
    sigma = np.maximum(np.asarray(p.sigma), EPS)
    return ds.with_features((ds.features - mu) / sigma)


def fit_minmax(rows: Dataset) -> PreprocParams:
    if rows.n_rows == 0:
        raise InsufficientDataError("min-max scaler needs at least one row")
    _observed_columns(rows, "min-max scaler")
    return PreprocParams(
        kind="minmax",
        n_features=rows.n_features,
        fitted_on=rows.n_rows,
        mins=np.nanmin(rows.features, axis=0).tolist(),
        maxs=np.nanmax(rows.features, axis=0).tolist(),
    )


def apply_minmax(p: PreprocParams, ds: Dataset) -> Dataset:
    """Map ``x`` to ``(x - min) / max(max - min, EPS)``; no clamping."""
    _check_kind(p, "minmax")
    _check_width(p, ds)
    lo = np.asarray(p.mins)
    span = np.maximum(np.asarray(p.maxs) - lo, EPS)
    return ds.with_features((ds.features - lo) / span)


# ---------------------------------------------------------------------------
# KNN imputation
# ---------------------------------------------------------------------------


def fit_knn_imputer(rows: Dataset, k: int) -> PreprocParams:
    """Keep ``rows`` as the donor pool of a ``k``-nearest-neighbour imputer."""
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if rows.n_rows == 0:
        raise InsufficientDataError("KNN imputer needs at least one donor row")
    reference = [
        [None if np.isnan(v) else float(v) for v in row] for row in rows.features
    ]
    return PreprocParams(
        kind="knn_impute",
        n_features=rows.n_features,
        fitted_on=rows.n_rows,
        reference=reference,
        k=k,
    )


def _impute_row(
    x: np.ndarray, reference: np.ndarray, observed: np.ndarray, k: int, row: int
) -> np.ndarray:
    present = ~np.isnan(x)
    mutual = observed & present
    diff = np.where(mutual, reference - np.where(present, x, 0.0), 0.0)
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    dist[~mutual.any(axis=1)] = np.inf

    out = x.copy()
    for j in np.flatnonzero(~present):
        donors = np.flatnonzero(observed[:, j])
        if donors.size == 0:
            raise DonorMissingError(f"row {row}: column {j} has no observed donor value")
        order = np.argsort(dist[donors], kind="stable")
        nearest = donors[order[:k]]
        d = dist[nearest]
        values = reference[nearest, j]
        exact = d == 0.0
        if exact.any():
            out[j] = float(np.mean(values[exact]))
        elif np.all(np.isinf(d)):
            out[j] = float(np.mean(values))
        else:
            weights = 1.0 / d
            out[j] = float(np.sum(weights * values) / np.sum(weights))
    return out


def apply_knn_imputer(p: PreprocParams, ds: Dataset) -> Dataset:
    """Fill every missing cell from the ``k`` nearest donors holding that column.

    Distance is Euclidean over the features both rows observe; ties go to the
    earlier donor. Donors at distance zero are copied directly, otherwise
    donors are weighted by inverse distance.
    """
    _check_kind(p, "knn_impute")
    _check_width(p, ds)
    if not ds.has_missing():
        return ds
    assert p.k is not None
    reference = p.reference_matrix()
    observed = ~np.isnan(reference)
    features = ds.features.copy()
    rows_with_gaps = np.flatnonzero(np.isnan(features).any(axis=1))
    for i in rows_with_gaps:
        features[i] = _impute_row(features[i], reference, observed, p.k, int(i))
    logger.debug(f"Imputed {len(rows_with_gaps)} rows from {reference.shape[0]} donors")
    return ds.with_features(features)


def knn_impute(ds: Dataset, k: int, fit_rows: Iterable[int] | np.ndarray) -> Dataset:
    """Impute ``ds`` using only the rows at ``fit_rows`` as donors."""
    params = fit_knn_imputer(ds.take(np.fromiter(fit_rows, dtype=np.int64)), k)
    return apply_knn_imputer(params, ds)


# ---------------------------------------------------------------------------
# Moving-average smoothing
# ---------------------------------------------------------------------------


def _check_window(w: int) -> None:
    if w < 1 or w % 2 == 0:
        raise ConfigError(f"moving-average window must be an odd count >= 1, got {w}")


def fit_moving_average(rows: Dataset, w: int) -> PreprocParams:
    _check_window(w)
    return PreprocParams(
        kind="moving_average", n_features=rows.n_features, fitted_on=rows.n_rows, window=w
    )


def smooth_matrix(features: np.ndarray, w: int) -> np.ndarray:
    """Centered, boundary-truncated moving average down the rows; NaN cells stay NaN."""
    n = features.shape[0]
    half = (w - 1) // 2
    values = np.where(np.isnan(features), 0.0, features)
    counts = (~np.isnan(features)).astype(np.float64)
    out = np.empty_like(features)
    for t in range(n):
        lo, hi = max(0, t - half), min(n, t + half + 1)
        total = values[lo:hi].sum(axis=0)
        seen = counts[lo:hi].sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[t] = np.where(seen > 0, total / seen, np.nan)
    out[np.isnan(features)] = np.nan
    return out


def moving_average_smooth(ds: Dataset, w: int) -> Dataset:
    """Smooth every feature over the row sequence exactly as given.

    Raises:
        MetadataError: If ``time_index`` is absent or not strictly increasing.
    """
    _check_window(w)
    if not ds.meta.has("time_index"):
        raise MetadataError("moving-average smoothing needs time_index on every row")
    times = ds.meta.column("time_index")
    if np.any(np.diff(times) <= 0):
        raise MetadataError("rows must be strictly ordered by time_index")
    if w == 1:
        return ds
    return ds.with_features(smooth_matrix(ds.features, w))


def apply_moving_average(p: PreprocParams, ds: Dataset) -> Dataset:
    """Smooth ``ds`` in time order, returning rows in their original order.

    Rows sharing a time step (copies) keep their relative order.
    """
    _check_kind(p, "moving_average")
    _check_width(p, ds)
    assert p.window is not None
    if not ds.meta.has("time_index"):
        raise MetadataError("moving-average smoothing needs time_index on every row")
    if p.window == 1 or ds.n_rows == 0:
        return ds
    order = np.argsort(ds.meta.column("time_index"), kind="stable")
    smoothed = np.empty_like(ds.features)
    smoothed[order] = smooth_matrix(ds.features[order], p.window)
    return ds.with_features(smoothed)


# ---------------------------------------------------------------------------
# t-test feature selection
# ---------------------------------------------------------------------------


def welch_statistics(rows: Dataset) -> np.ndarray:
    """|t| per feature between class 0 and class 1 (0 where undefined)."""
    if len(np.unique(rows.labels)) < 2:
        raise ClassCoverageError("t-test selection needs both classes among the fit rows")
    zero = rows.features[rows.labels == 0]
    one = rows.features[rows.labels == 1]
    scores = np.zeros(rows.n_features)
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        for j in range(rows.n_features):
            a = zero[:, j][~np.isnan(zero[:, j])]
            b = one[:, j][~np.isnan(one[:, j])]
            if a.size < 2 or b.size < 2:
                continue
            t = stats.ttest_ind(a, b, equal_var=False).statistic
            scores[j] = abs(float(t)) if np.isfinite(t) else 0.0
    return scores


def fit_ttest_selector(rows: Dataset, top_k: int) -> PreprocParams:
    """Keep the ``top_k`` features with the largest Welch |t| (ties: lower index)."""
    if not 1 <= top_k <= rows.n_features:
        raise ConfigError(f"top_k must lie in [1, {rows.n_features}], got {top_k}")
    scores = welch_statistics(rows)
    ranked = sorted(range(rows.n_features), key=lambda j: (-scores[j], j))
    return PreprocParams(
        kind="ttest_select",
        n_features=rows.n_features,
        fitted_on=rows.n_rows,
        supervised=True,
        selected=sorted(ranked[:top_k]),
    )


def apply_selector(p: PreprocParams, ds: Dataset) -> Dataset:
    _check_kind(p, "ttest_select")
    _check_width(p, ds)
    return ds.with_features(ds.features[:, p.selected])


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def fit_params(
    kind: PreprocKind, rows: Dataset, k: int = 5, window: int = 3, top_k: int = 1
) -> PreprocParams:
    """Fit the transform named ``kind`` on ``rows``."""
    if kind == "standardize":
        return fit_standardizer(rows)
    if kind == "minmax":
        return fit_minmax(rows)
    if kind == "knn_impute":
        return fit_knn_imputer(rows, k)
    if kind == "moving_average":
        return fit_moving_average(rows, window)
    if kind == "ttest_select":
        return fit_ttest_selector(rows, top_k)
    raise ConfigError(f"unknown preprocessing kind '{kind}'")


def apply_params(p: PreprocParams, ds: Dataset) -> Dataset:
    if p.kind == "standardize":
        return apply_standardizer(p, ds)
    if p.kind == "minmax":
        return apply_minmax(p, ds)
    if p.kind == "knn_impute":
        return apply_knn_imputer(p, ds)
    if p.kind == "moving_average":
        return apply_moving_average(p, ds)
    return apply_selector(p, ds)
