"""
Multivariate imputation by chained equations with deterministic linear
regression.
"""

import logging
import warnings
from typing import Optional

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.experimental import enable_iterative_imputer  # noqa: F401
from sklearn.impute import IterativeImputer
from sklearn.linear_model import Ridge

from app.errors import InsufficientDataError
from app.services.impute.schemas import DayMatrix, ImputationResult

logger = logging.getLogger(__name__)

# Keeps collinear hour columns solvable without moving the fit
RIDGE = 1e-8


def check_observability(observed: np.ndarray):
    """Every column must be observed at least once."""
    empty = np.flatnonzero(~observed.any(axis=0))
    if len(empty):
        raise InsufficientDataError(f"Column {int(empty[0])} is never observed")


class MiceImputer:
    """
    Cyclic regression of each incomplete column on all the others.

    Columns are visited left to right, starting from a column-mean fill, for
    exactly `cycles` passes; no posterior sampling and no early stop.
    """

    def __init__(self, cycles: int = 10):
        self.cycles = cycles
        self.means_ = None
        self.model_: Optional[IterativeImputer] = None
        self.completed_ = None
        self.iterations_ = 0

    def _model(self) -> IterativeImputer:
        return IterativeImputer(
            estimator=Ridge(alpha=RIDGE),
            imputation_order="roman",
            initial_strategy="mean",
            skip_complete=True,
            max_iter=self.cycles,
            tol=0,
            sample_posterior=False,
            random_state=0,
        )

    def fit(self, matrix: DayMatrix) -> "MiceImputer":
        cells, observed = matrix.cells, matrix.observed_mask
        check_observability(observed)
        self.means_ = np.nanmean(cells, axis=0)
        self.model_ = None
        self.iterations_ = 0
        completed = np.where(observed, cells, self.means_)
        if not observed.all():
            self.model_ = self._model()
            with warnings.catch_warnings():
                # tol=0 never stops early, which sklearn reports as non-convergence
                warnings.simplefilter("ignore", ConvergenceWarning)
                completed = self.model_.fit_transform(np.where(observed, cells, np.nan))
            self.iterations_ = int(self.model_.n_iter_)
            incomplete = int((~observed.all(axis=0)).sum())
            logger.debug(f"MICE ran {self.iterations_} cycles over {incomplete} columns")
        self.completed_ = completed
        return self

    def transform(self, matrix: DayMatrix) -> ImputationResult:
        """Apply the fitted regressions to a new matrix."""
        cells, observed = matrix.cells, matrix.observed_mask
        if self.model_ is None or observed.all():
            # Fitted on a complete matrix: mean fill stays
            completed = np.where(observed, cells, self.means_)
        else:
            completed = self.model_.transform(np.where(observed, cells, np.nan))
        return self._result(completed, observed)

    def fit_transform(self, matrix: DayMatrix) -> ImputationResult:
        self.fit(matrix)
        return self._result(self.completed_, matrix.observed_mask)

    def _result(self, completed: np.ndarray, observed: np.ndarray) -> ImputationResult:
        return ImputationResult(
            filled=completed,
            filled_positions=np.flatnonzero(~observed),
            method="mice",
            iterations_used=self.iterations_,
        )


def impute_mice(matrix: DayMatrix, cycles: int = 10) -> ImputationResult:
    """
    MICE imputation of a day matrix.

    Args:
        matrix: Day matrix with missing cells
        cycles: Number of passes over the incomplete columns

    Returns:
        Completed matrix
    """
    return MiceImputer(cycles=cycles).fit_transform(matrix)
