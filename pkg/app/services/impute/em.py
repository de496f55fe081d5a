"""
Expectation-maximization imputation under a multivariate normal model.

Each row of the day matrix is one draw from N(mu, Sigma). The E-step computes
the conditional mean and covariance of the missing cells of every row given
its observed cells; the M-step re-estimates mu and Sigma from the completed
sufficient statistics.
"""

import logging
from typing import Dict, Tuple

import numpy as np

from app.errors import InsufficientDataError
from app.services.impute.schemas import DayMatrix, EmModel, ImputationResult

logger = logging.getLogger(__name__)

MIN_ROWS = 25
RIDGE_SCALE = 1e-6


def _ridge(covariance: np.ndarray) -> Tuple[np.ndarray, bool]:
    covariance = 0.5 * (covariance + covariance.T)
    floor = RIDGE_SCALE * np.trace(covariance) / covariance.shape[0]
    if floor <= 0:
        floor = RIDGE_SCALE
    if np.linalg.eigvalsh(covariance)[0] < floor:
        return covariance + floor * np.eye(covariance.shape[0]), True
    return covariance, False


def _patterns(observed: np.ndarray) -> Dict[bytes, np.ndarray]:
    """Group row indices by missingness pattern."""
    groups: Dict[bytes, list] = {}
    for row, pattern in enumerate(observed):
        groups.setdefault(pattern.tobytes(), []).append(row)
    return {key: np.array(rows) for key, rows in groups.items()}


class EmImputer:
    """Multivariate normal EM over day rows."""

    def __init__(self, max_iters: int = 200, tol: float = 1e-8):
        self.max_iters = max_iters
        self.tol = tol
        self.model_ = None
        self.iterations_ = 0
        self.converged_ = False

    @staticmethod
    def _check(cells: np.ndarray, observed: np.ndarray):
        if int(observed.any(axis=1).sum()) < MIN_ROWS:
            raise InsufficientDataError(f"EM needs at least {MIN_ROWS} rows with an observed cell")
        empty = np.flatnonzero(~observed.any(axis=0))
        if len(empty):
            raise InsufficientDataError(f"Column {int(empty[0])} is never observed")

    def _e_step(self, cells, observed, groups, mean, covariance):
        """Completed rows, summed conditional covariance and observed log-likelihood."""
        completed = np.where(observed, cells, 0.0)
        extra = np.zeros_like(covariance)
        log_likelihood = 0.0
        for key, rows in groups.items():
            obs = observed[rows[0]]
            mis = ~obs
            sigma_oo = covariance[np.ix_(obs, obs)]
            chol = np.linalg.cholesky(sigma_oo)
            centered = cells[np.ix_(rows, obs)] - mean[obs]
            # Solve Sigma_oo^-1 (x_o - mu_o) through the Cholesky factor
            half = np.linalg.solve(chol, centered.T)
            log_likelihood -= 0.5 * float(np.sum(half * half))
            log_likelihood -= len(rows) * (np.sum(np.log(np.diag(chol))) + 0.5 * obs.sum() * np.log(2 * np.pi))
            if not mis.any():
                continue
            sigma_mo = covariance[np.ix_(mis, obs)]
            weights = np.linalg.solve(chol.T, np.linalg.solve(chol, sigma_mo.T)).T
            completed[np.ix_(rows, mis)] = mean[mis] + centered @ weights.T
            conditional = covariance[np.ix_(mis, mis)] - weights @ sigma_mo.T
            extra[np.ix_(mis, mis)] += len(rows) * conditional
        return completed, extra, log_likelihood

    def fit(self, matrix: DayMatrix) -> "EmImputer":
        cells, observed = matrix.cells, matrix.observed_mask
        self._check(cells, observed)
        active = observed.any(axis=1)
        cells, observed = cells[active], observed[active]
        n_rows = cells.shape[0]
        groups = _patterns(observed)

        mean = np.nanmean(cells, axis=0)
        start = np.where(observed, cells, mean)
        covariance, _ = _ridge(np.cov(start, rowvar=False, bias=True))

        trace = []
        self.converged_ = False
        for iteration in range(1, self.max_iters + 1):
            completed, extra, log_likelihood = self._e_step(cells, observed, groups, mean, covariance)
            trace.append(log_likelihood)
            mean = completed.mean(axis=0)
            centered = completed - mean
            covariance, ridged = _ridge((centered.T @ centered + extra) / n_rows)
            self.iterations_ = iteration
            if len(trace) > 1:
                change = abs(trace[-1] - trace[-2]) / max(abs(trace[-2]), 1e-300)
                if change < self.tol:
                    self.converged_ = True
                    break
            if ridged:
                logger.debug(f"EM iteration {iteration}: ridge floor applied")
        logger.debug(f"EM stopped after {self.iterations_} iterations (converged={self.converged_})")
        self.model_ = EmModel(mean=mean, covariance=covariance, log_likelihood_trace=trace)
        return self

    def transform(self, matrix: DayMatrix) -> ImputationResult:
        """Fill missing cells with their conditional means under the fitted model."""
        cells, observed = matrix.cells, matrix.observed_mask
        filled = cells.copy()
        mean, covariance = self.model_.mean, self.model_.covariance
        for key, rows in _patterns(observed).items():
            obs = observed[rows[0]]
            mis = ~obs
            if not mis.any():
                continue
            if not obs.any():
                filled[np.ix_(rows, mis)] = mean
                continue
            sigma_oo = covariance[np.ix_(obs, obs)]
            sigma_mo = covariance[np.ix_(mis, obs)]
            centered = cells[np.ix_(rows, obs)] - mean[obs]
            filled[np.ix_(rows, mis)] = mean[mis] + np.linalg.solve(sigma_oo, centered.T).T @ sigma_mo.T
        return ImputationResult(
            filled=filled,
            filled_positions=np.flatnonzero(~observed),
            method="em",
            iterations_used=self.iterations_,
            converged=self.converged_,
        )

    def fit_transform(self, matrix: DayMatrix) -> ImputationResult:
        return self.fit(matrix).transform(matrix)


def impute_em(matrix: DayMatrix, max_iters: int = 200, tol: float = 1e-8) -> Tuple[ImputationResult, EmModel]:
    """
    EM imputation of a day matrix.

    Args:
        matrix: Day matrix with missing cells
        max_iters: Iteration cap
        tol: Relative log-likelihood change that counts as converged

    Returns:
        (completed matrix, fitted model)
    """
    imputer = EmImputer(max_iters=max_iters, tol=tol)
    result = imputer.fit_transform(matrix)
    return result, imputer.model_
