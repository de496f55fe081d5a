"""
Recurrent cells: parameter initialization and one timestep forward and
backward for a batch of sequences.

Every step takes an `active` flag per sequence. An inactive (masked) step
leaves the state untouched and passes gradients straight through.
"""

from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from app.errors import NumericDomainError
from app.services.neural.schemas import CellKind, CellState, ModelParams


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def init_params(cell_kind: CellKind, hidden_size: int, seed: int = 0) -> ModelParams:
    """
    Glorot-uniform input and dense weights, orthogonal recurrent weights,
    zero biases except the LSTM forget gate (1).
    """
    rng = np.random.default_rng(seed)
    gates, size = cell_kind.gates, hidden_size
    limit = np.sqrt(6.0 / (1 + size))
    w_x = rng.uniform(-limit, limit, size=(gates * size, 1))
    w_h = np.vstack([_orthogonal(rng, size) for _ in range(gates)])
    bias = np.zeros(gates * size)
    if cell_kind is CellKind.LSTM:
        bias[size:2 * size] = 1.0
    dense_weight = rng.uniform(-limit, limit, size=size)
    return ModelParams(
        cell_kind=cell_kind,
        hidden_size=size,
        weights={"W_x": w_x, "W_h": w_h, "b": bias, "dense_weight": dense_weight, "dense_bias": np.zeros(1)},
    )


class StepCache(NamedTuple):
    x: np.ndarray
    active: np.ndarray
    h_prev: np.ndarray
    c_prev: Optional[np.ndarray]
    gates: Tuple[np.ndarray, ...]
    h_new: np.ndarray
    c_new: Optional[np.ndarray]


class StepOutput(NamedTuple):
    hidden: np.ndarray
    state: CellState
    skipped: bool


def step_forward(
    params: ModelParams, x: np.ndarray, h: np.ndarray, c: Optional[np.ndarray], active: np.ndarray
) -> StepCache:
    """
    One timestep for a batch.

    Args:
        params: Cell parameters
        x: Inputs, shape (B,)
        h: Hidden state, shape (B, H)
        c: LSTM cell memory, shape (B, H), else None
        active: Per-sequence flag; False skips the update

    Returns:
        Cache with the new state and everything the backward step needs
    """
    w = params.weights
    size = params.hidden_size
    x_part = x[:, None] * w["W_x"][:, 0][None, :]
    keep = active[:, None]

    if params.cell_kind is CellKind.SIMPLE_RNN:
        candidate = np.tanh(x_part + h @ w["W_h"].T + w["b"])
        h_new = np.where(keep, candidate, h)
        return StepCache(x, active, h, None, (candidate,), h_new, None)

    if params.cell_kind is CellKind.GRU:
        zr = sigmoid(x_part[:, :2 * size] + h @ w["W_h"][:2 * size].T + w["b"][:2 * size])
        z, r = zr[:, :size], zr[:, size:]
        n = np.tanh(x_part[:, 2 * size:] + (r * h) @ w["W_h"][2 * size:].T + w["b"][2 * size:])
        h_new = np.where(keep, (1.0 - z) * h + z * n, h)
        return StepCache(x, active, h, None, (z, r, n), h_new, None)

    pre = x_part + h @ w["W_h"].T + w["b"]
    i = sigmoid(pre[:, :size])
    f = sigmoid(pre[:, size:2 * size])
    g = np.tanh(pre[:, 2 * size:3 * size])
    o = sigmoid(pre[:, 3 * size:])
    c_candidate = f * c + i * g
    tanh_c = np.tanh(c_candidate)
    h_new = np.where(keep, o * tanh_c, h)
    c_new = np.where(keep, c_candidate, c)
    return StepCache(x, active, h, c, (i, f, g, o, tanh_c), h_new, c_new)


def step_backward(
    params: ModelParams,
    cache: StepCache,
    dh: np.ndarray,
    dc: Optional[np.ndarray],
    grads: Dict[str, np.ndarray],
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Backpropagate one timestep, accumulating into `grads`.

    Returns:
        Gradients with respect to the previous hidden state and cell memory
    """
    w = params.weights
    size = params.hidden_size
    keep = cache.active[:, None].astype(np.float64)
    dh_step = dh * keep
    h_prev, x = cache.h_prev, cache.x

    if params.cell_kind is CellKind.SIMPLE_RNN:
        (candidate,) = cache.gates
        dpre = dh_step * (1.0 - candidate * candidate)
        dh_prev = dpre @ w["W_h"]
        dc_prev = None
    elif params.cell_kind is CellKind.GRU:
        z, r, n = cache.gates
        dn_pre = dh_step * z * (1.0 - n * n)
        dz_pre = dh_step * (n - h_prev) * z * (1.0 - z)
        grads["W_h"][2 * size:] += dn_pre.T @ (r * h_prev)
        drh = dn_pre @ w["W_h"][2 * size:]
        dr_pre = drh * h_prev * r * (1.0 - r)
        dzr_pre = np.concatenate([dz_pre, dr_pre], axis=1)
        grads["W_h"][:2 * size] += dzr_pre.T @ h_prev
        dh_prev = dh_step * (1.0 - z) + drh * r + dzr_pre @ w["W_h"][:2 * size]
        dpre = np.concatenate([dzr_pre, dn_pre], axis=1)
        dc_prev = None
    else:
        i, f, g, o, tanh_c = cache.gates
        dc_step = dc * keep
        do = dh_step * tanh_c
        dc_total = dc_step + dh_step * o * (1.0 - tanh_c * tanh_c)
        dpre = np.concatenate(
            [
                dc_total * g * i * (1.0 - i),
                dc_total * cache.c_prev * f * (1.0 - f),
                dc_total * i * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dh_prev = dpre @ w["W_h"]
        dc_prev = dc_total * f + dc * (1.0 - keep)

    if params.cell_kind is not CellKind.GRU:
        grads["W_h"] += dpre.T @ h_prev
    grads["W_x"][:, 0] += dpre.T @ x
    grads["b"] += dpre.sum(axis=0)
    dh_prev = dh_prev + dh * (1.0 - keep)
    return dh_prev, dc_prev


def cell_step(params: ModelParams, x: float, state: CellState, masked: bool = False) -> StepOutput:
    """
    Advance one sequence by one hour.

    Args:
        params: Cell parameters
        x: Normalized input
        state: Current state (vectors of size H)
        masked: Skip the update and return the state unchanged

    Returns:
        (new hidden vector, new state, whether the step was skipped)
    """
    if masked:
        return StepOutput(state.hidden, state, True)
    if not np.isfinite(x):
        raise NumericDomainError(f"Non-finite input {x}")
    if state.hidden.shape != (params.hidden_size,):
        raise ValueError(f"State size {state.hidden.shape} does not match hidden size {params.hidden_size}")
    memory = state.cell_memory[None, :] if state.cell_memory is not None else None
    cache = step_forward(params, np.array([float(x)]), state.hidden[None, :], memory, np.array([True]))
    next_memory = cache.c_new[0] if cache.c_new is not None else None
    return StepOutput(cache.h_new[0], CellState(cache.h_new[0], next_memory), False)
