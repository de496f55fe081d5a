"""
Single recurrent layer followed by a one-neuron dense head, trained with MAE.
"""

from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from app.errors import EmptyLossError, NumericDomainError
from app.services.neural.cells import StepCache, step_backward, step_forward
from app.services.neural.schemas import CellState, ModelParams


class ForwardResult(NamedTuple):
    predictions: np.ndarray
    emitted: np.ndarray
    caches: List[StepCache]


def _as_batch(array, dtype=np.float64) -> np.ndarray:
    array = np.asarray(array, dtype=dtype)
    return array[None, :] if array.ndim == 1 else array


def forward(params: ModelParams, inputs, mask=None) -> ForwardResult:
    """
    Run sequences through the cell and the dense head.

    Args:
        params: Model parameters
        inputs: Normalized inputs, shape (T,) or (B, T)
        mask: True where the input is observed; masked steps are skipped

    Returns:
        Predictions of shape (B, T); masked steps carry the previous
        prediction forward and are flagged False in `emitted`
    """
    inputs = _as_batch(inputs)
    mask = np.ones_like(inputs, dtype=bool) if mask is None else _as_batch(mask, dtype=bool)
    if inputs.shape[1] == 0:
        raise ValueError("Cannot run an empty sequence")
    if not np.all(np.isfinite(inputs[mask])):
        raise NumericDomainError("Non-finite input at an unmasked step")
    # Masked positions may hold anything; the cell never reads them
    inputs = np.where(mask, inputs, 0.0)

    batch, steps = inputs.shape
    state = CellState.zeros(params, batch)
    h, c = state.hidden, state.cell_memory
    dense_weight, dense_bias = params.weights["dense_weight"], params.weights["dense_bias"][0]
    predictions = np.empty((batch, steps))
    caches = []
    for t in range(steps):
        cache = step_forward(params, inputs[:, t], h, c, mask[:, t])
        h, c = cache.h_new, cache.c_new
        predictions[:, t] = h @ dense_weight + dense_bias
        caches.append(cache)
    return ForwardResult(predictions, mask.copy(), caches)


def mae_loss(predictions, targets, eligible=None) -> Tuple[float, int]:
    """
    Mean absolute error over positions with a present target and an
    unmasked input.

    Args:
        predictions: Predicted values
        targets: Targets, NaN or None where missing
        eligible: Optional flags of unmasked input steps

    Returns:
        (loss, number of contributing positions)
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.array(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError("Predictions and targets differ in shape")
    contributing = ~np.isnan(targets)
    if eligible is not None:
        contributing &= np.asarray(eligible, dtype=bool)
    count = int(contributing.sum())
    if count == 0:
        raise EmptyLossError("No position contributes to the loss")
    return float(np.abs(predictions[contributing] - targets[contributing]).sum() / count), count


def backward(params: ModelParams, inputs, targets, mask=None) -> Tuple[float, int, Dict[str, np.ndarray]]:
    """
    Backpropagation through time of the MAE loss.

    Args:
        params: Model parameters
        inputs: Normalized inputs, shape (T,) or (B, T)
        targets: Targets of the same shape, NaN where missing
        mask: True where the input is observed

    Returns:
        (loss, contributing positions, gradients keyed like the parameter blocks)
    """
    result = forward(params, inputs, mask)
    targets = _as_batch(targets)
    contributing = result.emitted & ~np.isnan(targets)
    loss, count = mae_loss(result.predictions, targets, result.emitted)

    # Subgradient of |r| is 0 at r = 0
    residual_sign = np.where(contributing, np.sign(result.predictions - np.where(contributing, targets, 0.0)), 0.0)
    dprediction = residual_sign / count

    grads = params.zeros_like()
    dense_weight = params.weights["dense_weight"]
    batch = result.predictions.shape[0]
    dh = np.zeros((batch, params.hidden_size))
    dc: Optional[np.ndarray] = np.zeros_like(dh) if result.caches[0].c_prev is not None else None
    for t in range(len(result.caches) - 1, -1, -1):
        cache = result.caches[t]
        grads["dense_weight"] += dprediction[:, t] @ cache.h_new
        grads["dense_bias"][0] += dprediction[:, t].sum()
        dh = dh + dprediction[:, t][:, None] * dense_weight[None, :]
        dh, dc = step_backward(params, cache, dh, dc, grads)
    return loss, count, grads


def loss_only(params: ModelParams, inputs, targets, mask=None) -> float:
    """Loss without gradients."""
    result = forward(params, inputs, mask)
    return mae_loss(result.predictions, _as_batch(targets), result.emitted)[0]
