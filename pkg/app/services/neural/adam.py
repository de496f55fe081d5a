"""
Adam optimizer over parameter blocks.
"""

from typing import Dict, Tuple

import numpy as np

from app.services.neural.schemas import BLOCKS, AdamState, ModelParams


def init_adam(
    params: ModelParams,
    learning_rate: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    return AdamState(
        step=0,
        first_moment=params.zeros_like(),
        second_moment=params.zeros_like(),
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(params: ModelParams, grads: Dict[str, np.ndarray], state: AdamState) -> Tuple[ModelParams, AdamState]:
    """
    One bias-corrected Adam update.

    Args:
        params: Current parameters
        grads: Gradients keyed like the parameter blocks
        state: Optimizer state

    Returns:
        (updated parameters, updated state); the inputs are left unchanged
    """
    step = state.step + 1
    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step
    weights, first, second = {}, {}, {}
    for name in BLOCKS:
        g = grads[name]
        first[name] = state.beta1 * state.first_moment[name] + (1.0 - state.beta1) * g
        second[name] = state.beta2 * state.second_moment[name] + (1.0 - state.beta2) * (g * g)
        m_hat = first[name] / correction1
        v_hat = second[name] / correction2
        weights[name] = params.weights[name] - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        step=step,
        first_moment=first,
        second_moment=second,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return params.replace_weights(weights), new_state
