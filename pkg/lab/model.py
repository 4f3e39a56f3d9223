"""Fixed-architecture MLP classifier trained with full-batch gradient descent.

Layers ``d → 100 → 50 → 1`` by default: ReLU on hidden layers, a single
logistic output unit, binary cross-entropy loss.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy.special import expit

from shared.errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    InsufficientDataError,
    PreconditionError,
)
from shared.models.config import TrainConfig
from shared.models.dataset import Dataset

logger = logging.getLogger(__name__)

DEFAULT_HIDDEN = (100, 50)

Params = tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]


def _frozen_copy(arrays: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    out = []
    for a in arrays:
        c = np.array(a, dtype=np.float64, copy=True)
        c.setflags(write=False)
        out.append(c)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class MlpModel:
    """MLP parameters plus training bookkeeping.

    ``weights[i]`` has shape ``(fan_in, fan_out)``; ``biases[i]`` has shape
    ``(fan_out,)``.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    seed: int
    epoch_count: int = 0
    loss_trace: tuple[float, ...] = field(default_factory=tuple)
    val_loss_trace: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionError("weights and biases must describe the same nonempty layers")
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionError(f"layer {i}: bias shape {b.shape} does not fit {w.shape}")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise DimensionError(f"layer {i} input width does not match layer {i - 1}")
        if self.weights[-1].shape[1] != 1:
            raise DimensionError("output layer must have a single unit")
        object.__setattr__(self, "weights", _frozen_copy(self.weights))
        object.__setattr__(self, "biases", _frozen_copy(self.biases))

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(int(w.shape[1]) for w in self.weights[:-1])

    def params(self) -> Params:
        return self.weights, self.biases

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in (*self.weights, *self.biases))

    def same_parameters(self, other: MlpModel) -> bool:
        """Bitwise equality of every weight and bias."""
        return len(self.weights) == len(other.weights) and all(
            np.array_equal(a, b)
            for a, b in zip(
                (*self.weights, *self.biases), (*other.weights, *other.biases), strict=True
            )
        )


def init_mlp(d: int, seed: int, hidden: Sequence[int] = DEFAULT_HIDDEN) -> MlpModel:
    """Glorot-uniform weights in ``±sqrt(6 / (fan_in + fan_out))`` and zero biases."""
    if d < 1:
        raise ConfigError(f"input dimension must be at least 1, got {d}")
    if not hidden or any(h < 1 for h in hidden):
        raise ConfigError(f"hidden widths must be positive, got {tuple(hidden)}")
    rng = np.random.default_rng(seed)
    sizes = [d, *hidden, 1]
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:], strict=True):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=tuple(weights), biases=tuple(biases), seed=seed)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------


def _forward(params: Params, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    weights, biases = params
    activations = [x]
    h = x
    for w, b in zip(weights[:-1], biases[:-1], strict=True):
        h = np.maximum(h @ w + b, 0.0)
        activations.append(h)
    logits = (h @ weights[-1] + biases[-1]).reshape(-1)
    return activations, logits


def bce_loss(logits: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy computed from logits."""
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def loss_and_gradients(
    params: Params, x: np.ndarray, y: np.ndarray
) -> tuple[float, tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Loss and analytic gradients (weights, biases) for one full batch."""
    weights, _ = params
    activations, logits = _forward(params, x)
    loss = bce_loss(logits, y)

    delta = ((expit(logits) - y) / x.shape[0]).reshape(-1, 1)
    grad_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        a_prev = activations[layer]
        grad_w[layer] = a_prev.T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer:
            delta = (delta @ weights[layer].T) * (activations[layer] > 0)
    return loss, tuple(grad_w), tuple(grad_b)


def _check_inputs(m: MlpModel, ds: Dataset, what: str) -> None:
    if ds.has_missing():
        raise PreconditionError(f"{what} set has missing values; impute before training")
    if ds.n_features != m.input_dim:
        raise DimensionError(
            f"model expects {m.input_dim} features, {what} set has {ds.n_features}"
        )
    if ds.n_rows == 0:
        raise InsufficientDataError(f"{what} set is empty")


def _step(
    params: Params,
    grads_w: tuple[np.ndarray, ...],
    grads_b: tuple[np.ndarray, ...],
    lr: float,
) -> Params:
    weights, biases = params
    return (
        tuple(w - lr * g for w, g in zip(weights, grads_w, strict=True)),
        tuple(b - lr * g for b, g in zip(biases, grads_b, strict=True)),
    )


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train(m: MlpModel, train_ds: Dataset, cfg: TrainConfig) -> MlpModel:
    """Full-batch gradient descent on binary cross-entropy for ``cfg.max_epochs`` epochs.

    Returns:
        A new model; ``loss_trace[i]`` is the training loss at the start of
        epoch ``i + 1``.

    Raises:
        PreconditionError: If the training set has missing values.
        DivergenceError: If the loss stops being finite.
    """
    _check_inputs(m, train_ds, "training")
    x, y = train_ds.features, train_ds.labels.astype(np.float64)
    params = m.params()
    trace: list[float] = []
    for epoch in range(1, cfg.max_epochs + 1):
        loss, gw, gb = loss_and_gradients(params, x, y)
        if not math.isfinite(loss):
            raise DivergenceError(epoch, loss)
        trace.append(loss)
        params = _step(params, gw, gb, cfg.learning_rate)
    trained = replace(
        m,
        weights=params[0],
        biases=params[1],
        epoch_count=m.epoch_count + cfg.max_epochs,
        loss_trace=tuple(trace),
        val_loss_trace=(),
    )
    if not trained.is_finite():
        raise DivergenceError(cfg.max_epochs, float("nan"))
    logger.debug(f"Trained {cfg.max_epochs} epochs, final loss {trace[-1]:.6f}")
    return trained


def train_early_stop(m: MlpModel, train_ds: Dataset, val: Dataset, cfg: TrainConfig) -> MlpModel:
    """Train while monitoring validation loss; return the best snapshot.

    Validation loss is measured after every update. Training stops once it has
    not improved for ``patience`` consecutive epochs (``max_epochs`` when
    ``cfg.early_stop`` is unset). ``epoch_count`` of the result counts the
    epochs up to the returned snapshot.
    """
    _check_inputs(m, train_ds, "training")
    _check_inputs(m, val, "validation")
    patience = cfg.early_stop.patience if cfg.early_stop is not None else cfg.max_epochs
    x, y = train_ds.features, train_ds.labels.astype(np.float64)
    xv, yv = val.features, val.labels.astype(np.float64)

    params = m.params()
    best_params = params
    best_loss = math.inf
    best_epoch = 0
    stale = 0
    trace: list[float] = []
    val_trace: list[float] = []
    for epoch in range(1, cfg.max_epochs + 1):
        loss, gw, gb = loss_and_gradients(params, x, y)
        if not math.isfinite(loss):
            raise DivergenceError(epoch, loss)
        trace.append(loss)
        params = _step(params, gw, gb, cfg.learning_rate)

        val_loss = bce_loss(_forward(params, xv)[1], yv)
        if not math.isfinite(val_loss):
            raise DivergenceError(epoch, val_loss)
        val_trace.append(val_loss)
        if val_loss < best_loss:
            best_loss, best_params, best_epoch, stale = val_loss, params, epoch, 0
        else:
            stale += 1
            if stale >= patience:
                logger.debug(f"Early stop at epoch {epoch}; best epoch {best_epoch}")
                break

    return replace(
        m,
        weights=best_params[0],
        biases=best_params[1],
        epoch_count=m.epoch_count + best_epoch,
        loss_trace=tuple(trace),
        val_loss_trace=tuple(val_trace),
    )


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def predict_proba(m: MlpModel, ds: Dataset) -> np.ndarray:
    _check_inputs(m, ds, "prediction")
    return expit(_forward(m.params(), ds.features)[1])


def predict(m: MlpModel, ds: Dataset) -> np.ndarray:
    """Class 1 where the logistic output exceeds 0.5, else class 0."""
    _check_inputs(m, ds, "prediction")
    logits = _forward(m.params(), ds.features)[1]
    return (logits > 0.0).astype(np.int64)


def accuracy(m: MlpModel, ds: Dataset) -> float:
    return float(np.mean(predict(m, ds) == ds.labels))


# ---------------------------------------------------------------------------
# Gradient check and debugging dump
# ---------------------------------------------------------------------------


def numeric_gradients(
    params: Params, x: np.ndarray, y: np.ndarray, step: float = 1e-5
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Central finite differences of the loss for every parameter."""
    weights = [w.copy() for w in params[0]]
    biases = [b.copy() for b in params[1]]
    tensors = weights + biases
    grads = [np.zeros_like(t) for t in tensors]
    for t, g in zip(tensors, grads, strict=True):
        flat, gflat = t.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = bce_loss(_forward((tuple(weights), tuple(biases)), x)[1], y)
            flat[i] = original - step
            down = bce_loss(_forward((tuple(weights), tuple(biases)), x)[1], y)
            flat[i] = original
            gflat[i] = (up - down) / (2.0 * step)
    n = len(weights)
    return tuple(grads[:n]), tuple(grads[n:])


def gradient_relative_error(m: MlpModel, ds: Dataset, step: float = 1e-5) -> float:
    """``|g_analytic − g_numeric| / (|g_analytic| + |g_numeric|)`` over all parameters."""
    x, y = ds.features, ds.labels.astype(np.float64)
    _, gw, gb = loss_and_gradients(m.params(), x, y)
    nw, nb = numeric_gradients(m.params(), x, y, step)
    analytic = np.concatenate([g.reshape(-1) for g in (*gw, *gb)])
    numeric = np.concatenate([g.reshape(-1) for g in (*nw, *nb)])
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def model_to_dict(m: MlpModel) -> dict[str, Any]:
    """JSON-ready dump of the parameters (debugging aid)."""
    return {
        "input_dim": m.input_dim,
        "hidden": list(m.hidden),
        "seed": m.seed,
        "epoch_count": m.epoch_count,
        "weights": [w.tolist() for w in m.weights],
        "biases": [b.tolist() for b in m.biases],
    }
