"""Synthetic data generators.

All generators are pure functions of their configuration: the same config and
seed always produce bitwise-identical datasets.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable

import numpy as np
from pydantic import ValidationError

from shared.errors import ConfigError, InsufficientDataError, SplitIndexError
from shared.models.config import BlobConfig, FrankensteinPlan
from shared.models.dataset import Dataset, Metadata

logger = logging.getLogger(__name__)


def sign_pattern(k: int) -> np.ndarray:
    """Alternating +1, -1, +1, ... used to place informative class means."""
    return np.where(np.arange(k) % 2 == 0, 1.0, -1.0)


def _resized(cfg: BlobConfig, n: int) -> BlobConfig:
    try:
        return BlobConfig.model_validate({**cfg.model_dump(), "n": n})
    except ValidationError as e:
        raise ConfigError(f"blob config cannot produce {n} rows: {e}") from e


def _blob_block(cfg: BlobConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n_ones = cfg.class_one_count()
    labels = np.zeros(cfg.n, dtype=np.int64)
    labels[:n_ones] = 1
    labels = rng.permutation(labels)

    features = rng.standard_normal((cfg.n, cfg.d))
    offsets = sign_pattern(cfg.n_informative) * (cfg.separation / 2.0)
    features[:, : cfg.n_informative] += np.where(labels == 1, 1.0, -1.0)[:, None] * offsets
    return features, labels


def gen_blobs(cfg: BlobConfig, provenance_start: int = 0) -> Dataset:
    """Two-class Gaussian blobs.

    Informative column j has class means ``±s_j·separation/2`` with unit
    variance (``s_j`` alternating in sign); the other columns are standard
    normal noise.
    """
    features, labels = _blob_block(cfg, np.random.default_rng(cfg.seed))
    logger.debug(
        f"Generated blobs n={cfg.n} d={cfg.d} informative={cfg.n_informative} "
        f"separation={cfg.separation}"
    )
    return Dataset(
        features=features,
        labels=labels,
        meta=Metadata.fresh(cfg.n, start=provenance_start),
    )


def inject_spurious_feature(ds: Dataset, delta: float, leaky: bool, seed: int) -> Dataset:
    """Append one column: ``Normal(label·delta, 1)`` when leaky, ``Normal(0, 1)`` otherwise.

    With the same seed the two branches share their noise draw, so ``delta=0``
    makes them identical.
    """
    if delta < 0:
        raise ConfigError(f"delta must be non-negative, got {delta}")
    if ds.n_rows == 0:
        raise InsufficientDataError("cannot add a feature to an empty dataset")
    column = np.random.default_rng(seed).standard_normal(ds.n_rows)
    if leaky:
        column = column + ds.labels * delta
    return ds.append_column(column)


def apply_shift(ds: Dataset, magnitude: float, row_selector: Iterable[int] | np.ndarray) -> Dataset:
    """Add ``magnitude`` to every feature of the selected rows."""
    idx = np.unique(np.fromiter(row_selector, dtype=np.int64))
    if idx.size and (int(idx[0]) < 0 or int(idx[-1]) >= ds.n_rows):
        raise SplitIndexError(f"row selector out of range for dataset of {ds.n_rows} rows")
    if magnitude == 0 or idx.size == 0:
        return ds
    features = ds.features.copy()
    features[idx] += magnitude
    return Dataset(features=features, labels=ds.labels, meta=ds.meta)


def gen_multisource(cfg: BlobConfig, n_sources: int, source_shift: float) -> Dataset:
    """Stack ``n_sources`` blob datasets of ``cfg.n`` rows each.

    Source ``s`` is shifted by ``s·source_shift`` along every feature.
    Provenance ids continue across sources so every row stays unique.
    """
    if n_sources < 2:
        raise ConfigError(f"n_sources must be at least 2, got {n_sources}")
    if source_shift < 0:
        raise ConfigError(f"source_shift must be non-negative, got {source_shift}")

    streams = np.random.SeedSequence(cfg.seed).spawn(n_sources)
    parts: list[Dataset] = []
    for s, stream in enumerate(streams):
        features, labels = _blob_block(cfg, np.random.default_rng(stream))
        features += s * source_shift
        parts.append(
            Dataset(
                features=features,
                labels=labels,
                meta=Metadata.fresh(cfg.n, start=s * cfg.n, source_id=np.full(cfg.n, s)),
            )
        )
    return Dataset.concat(parts)


def _drift_directions(cfg: BlobConfig) -> tuple[np.ndarray, np.ndarray]:
    k = cfg.n_informative
    half = max(1, (k + 1) // 2)
    a = np.zeros(cfg.d)
    a[:half] = sign_pattern(half)
    b = np.zeros(cfg.d)
    if k > half:
        b[half:k] = sign_pattern(k - half)
    elif cfg.d > half:
        b[half] = 1.0
    else:
        logger.warning("Single-column blobs cannot drift; class means stay fixed")
        b = a.copy()
    return a / np.linalg.norm(a), b / np.linalg.norm(b)


def drift_angle(t: np.ndarray, window_length: int) -> np.ndarray:
    """Angle of the class-mean direction at time ``t``.

    Fixed through the first window, then a linear turn to orthogonal over
    ``max(1, window_length // 10)`` steps.
    """
    span = max(1, window_length // 10)
    progress = np.clip((t - window_length + 1) / span, 0.0, 1.0)
    return (math.pi / 2.0) * progress


def gen_drifting_windows(
    cfg: BlobConfig, overlap: float, window_length: int | None = None
) -> tuple[Dataset, Dataset]:
    """Train and eval windows over one drifting, time-indexed sequence.

    The windows have equal length ``L`` (default ``cfg.n // 2``) and share
    ``floor(overlap·L)`` rows, which appear in both outputs with equal
    provenance ids.

    The class-mean direction holds still through the first window, then turns
    linearly to orthogonal over ``max(1, L // 10)`` steps and stays there.

    Returns:
        ``(train_window, eval_window)``.
    """
    if not 0.0 <= overlap < 1.0:
        raise ConfigError(f"overlap must lie in [0, 1), got {overlap}")
    length = window_length if window_length is not None else cfg.n // 2
    if length < 2:
        raise ConfigError(f"window length must be at least 2, got {length}")

    shared = int(math.floor(overlap * length + 1e-9))
    total = 2 * length - shared
    rng = np.random.default_rng(cfg.seed)

    # each consecutive pair of steps holds one row of each class
    pairs = (total + 1) // 2
    flips = rng.integers(0, 2, size=pairs)
    labels = np.column_stack([flips, 1 - flips]).reshape(-1)[:total]

    a, b = _drift_directions(cfg)
    theta = drift_angle(np.arange(total, dtype=np.float64), length)
    directions = np.cos(theta)[:, None] * a + np.sin(theta)[:, None] * b
    magnitude = cfg.separation * math.sqrt(cfg.n_informative) / 2.0

    features = rng.standard_normal((total, cfg.d))
    features += np.where(labels == 1, 1.0, -1.0)[:, None] * magnitude * directions

    sequence = Dataset(
        features=features,
        labels=labels,
        meta=Metadata.fresh(total, time_index=np.arange(total)),
    )
    train = sequence.take(np.arange(0, length))
    eval_window = sequence.take(np.arange(length - shared, total))
    logger.debug(f"Drifting windows: length={length} shared={shared} total={total}")
    return train, eval_window


def compose_frankenstein(plan: FrankensteinPlan, cfg: BlobConfig) -> list[Dataset]:
    """Cumulative datasets ``D_1, D_1∪D_2, ...`` of a staged composition.

    Stage 1 holds ``fresh_per_stage`` fresh rows. Every later stage adds the
    same number of fresh rows plus ``floor(dup_fraction·fresh_per_stage)``
    exact copies of rows drawn uniformly (with replacement) from the earlier
    stages; copies keep their provenance ids.
    """
    stage_cfg = _resized(cfg, plan.fresh_per_stage)
    streams = np.random.SeedSequence([cfg.seed, plan.seed]).spawn(plan.stages)
    n_dup = plan.duplicates_per_stage()

    cumulative: list[Dataset] = []
    current: Dataset | None = None
    for r, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        features, labels = _blob_block(stage_cfg, rng)
        fresh = Dataset(
            features=features,
            labels=labels,
            meta=Metadata.fresh(plan.fresh_per_stage, start=r * plan.fresh_per_stage),
        )
        if current is None:
            current = fresh
        else:
            parts = [current, fresh]
            if n_dup:
                parts.append(current.take(rng.integers(0, current.n_rows, size=n_dup)))
            current = Dataset.concat(parts)
        cumulative.append(current)
    logger.debug(
        f"Composed {plan.stages} stages of {plan.fresh_per_stage} fresh rows, "
        f"{n_dup} copies per later stage"
    )
    return cumulative
