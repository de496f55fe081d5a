"""
Finite-difference verification of the analytic BPTT gradients.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from app.services.neural.cells import init_params
from app.services.neural.network import backward, forward, loss_only
from app.services.neural.schemas import BLOCKS, BlockCheck, CellKind, GradientCheckReport, ModelParams

logger = logging.getLogger(__name__)

# Gradients smaller than this are compared in absolute terms
ERROR_FLOOR = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), ERROR_FLOOR)
    return np.abs(analytic - numeric) / scale


def numeric_gradients(params: ModelParams, inputs, targets, mask=None, fd_step: float = 1e-5) -> Dict[str, np.ndarray]:
    """Central differences of the loss for every weight."""
    numeric = {}
    for name in BLOCKS:
        base = params.weights[name]
        grad = np.zeros_like(base)
        for index in np.ndindex(base.shape):
            shifted = {key: value.copy() for key, value in params.weights.items()}
            shifted[name][index] = base[index] + fd_step
            plus = loss_only(params.replace_weights(shifted), inputs, targets, mask)
            shifted[name][index] = base[index] - fd_step
            minus = loss_only(params.replace_weights(shifted), inputs, targets, mask)
            grad[index] = (plus - minus) / (2 * fd_step)
        numeric[name] = grad
    return numeric


def gradient_check(
    params: ModelParams,
    inputs,
    targets,
    mask=None,
    fd_step: float = 1e-5,
    tolerance: float = 1e-4,
    gradients: Optional[Dict[str, np.ndarray]] = None,
) -> GradientCheckReport:
    """
    Compare analytic gradients against central finite differences.

    Args:
        params: Model parameters
        inputs: Normalized inputs
        targets: Targets, NaN where missing
        mask: True where the input is observed
        fd_step: Finite-difference step
        tolerance: Largest accepted relative error per block
        gradients: Analytic gradients to check; computed with `backward` when omitted

    Returns:
        Max relative error and pass/fail per parameter block
    """
    if gradients is None:
        _, _, gradients = backward(params, inputs, targets, mask)
    numeric = numeric_gradients(params, inputs, targets, mask, fd_step)
    report = GradientCheckReport(cell_kind=params.cell_kind, tolerance=tolerance)
    for name in BLOCKS:
        worst = float(np.max(relative_error(gradients[name], numeric[name])))
        report.blocks.append(BlockCheck(name=name, max_relative_error=worst, passed=worst < tolerance))
    return report


def random_problem(cell_kind: CellKind, seed: int, hidden_size: int = 4, length: int = 12,
                   masked_fraction: float = 0.2) -> Tuple[ModelParams, np.ndarray, np.ndarray, np.ndarray]:
    """
    Random parameters, inputs and targets for a gradient check.

    Targets sit at least 0.1 away from the predictions so no finite
    difference crosses the kink of |r|.
    """
    rng = np.random.default_rng(seed)
    params = init_params(cell_kind, hidden_size, seed=seed)
    weights = {name: value + rng.normal(0.0, 0.1, value.shape) for name, value in params.weights.items()}
    params = params.replace_weights(weights)
    inputs = rng.uniform(0.0, 1.0, length)
    mask = rng.uniform(size=length) >= masked_fraction
    mask[0] = True
    predictions = forward(params, inputs, mask).predictions[0]
    offsets = rng.uniform(0.1, 0.5, length) * rng.choice([-1.0, 1.0], length)
    targets = predictions + offsets
    targets[rng.uniform(size=length) < 0.1] = np.nan
    targets[0] = predictions[0] + 0.3
    return params, inputs, targets, mask


def run_suite(
    cell_kinds=tuple(CellKind), seeds: int = 20, tolerance: float = 1e-4
) -> Dict[CellKind, GradientCheckReport]:
    """
    Check every cell kind on random problems; the report per kind keeps the
    worst error of each block across seeds.
    """
    results = {}
    for cell_kind in cell_kinds:
        worst: Dict[str, float] = {name: 0.0 for name in BLOCKS}
        for seed in range(seeds):
            report = gradient_check(*random_problem(cell_kind, seed), tolerance=tolerance)
            for block in report.blocks:
                worst[block.name] = max(worst[block.name], block.max_relative_error)
        summary = GradientCheckReport(cell_kind=cell_kind, tolerance=tolerance)
        summary.blocks = [
            BlockCheck(name=name, max_relative_error=error, passed=error < tolerance) for name, error in worst.items()
        ]
        logger.info(f"{cell_kind.value}: {'PASS' if summary.passed else 'FAIL'}")
        results[cell_kind] = summary
    return results
