"""
Treatment dispatch for hourly sequences.

A `SeriesImputer` is fitted on one hourly sequence (the training inputs) and
can then complete that sequence or any later one with the same fitted state.
Mean and median work on the flat sequence; EM, MICE, KNN and RF work on its
day-by-hour matrix.
"""

import logging
import numpy as np

from app.services.impute.central import CentralImputer
from app.services.impute.em import EmImputer
from app.services.impute.forest import ForestImputer
from app.services.impute.knn import KnnImputer
from app.services.impute.matrix import from_day_matrix, to_day_matrix
from app.services.impute.mice import MiceImputer
from app.services.impute.schemas import DayMatrix, ImputationResult, Treatment

logger = logging.getLogger(__name__)


def make_imputer(treatment: Treatment, seed: int = 0, rf_trees: int = 50, rf_iters: int = 5, knn_k: int = 5):
    """Matrix or flat imputer for an imputation treatment."""
    if treatment is Treatment.MEAN:
        return CentralImputer("mean")
    if treatment is Treatment.MEDIAN:
        return CentralImputer("median")
    if treatment is Treatment.EM:
        return EmImputer()
    if treatment is Treatment.MICE:
        return MiceImputer()
    if treatment is Treatment.KNN:
        return KnnImputer(k=knn_k)
    if treatment is Treatment.RF:
        return ForestImputer(trees=rf_trees, iters=rf_iters, seed=seed)
    raise ValueError(f"{treatment.value} is not an imputation treatment")


class SeriesImputer:
    """Fit once on a training sequence, complete any sequence afterwards."""

    def __init__(self, treatment: Treatment, seed: int = 0, **options):
        self.treatment = treatment
        self.imputer = make_imputer(treatment, seed=seed, **options)
        self.flat = treatment in (Treatment.MEAN, Treatment.MEDIAN)
        self.fitted_ = False

    def _matrix(self, values: np.ndarray, start_hour: int) -> DayMatrix:
        return to_day_matrix(values, start_hour)

    def _flatten(self, result: ImputationResult, values: np.ndarray, matrix: DayMatrix) -> ImputationResult:
        filled = from_day_matrix(result.filled, len(values), matrix.start_offset)
        # Present values pass through untouched
        filled = np.where(np.isnan(values), filled, values)
        return ImputationResult(
            filled=filled,
            filled_positions=np.flatnonzero(np.isnan(values)),
            method=result.method,
            iterations_used=result.iterations_used,
            converged=result.converged,
            fallback=result.fallback,
        )

    def fit(self, values: np.ndarray, start_hour: int = 0) -> "SeriesImputer":
        self.imputer.fit(values if self.flat else self._matrix(values, start_hour))
        self.fitted_ = True
        return self

    def fit_transform(self, values: np.ndarray, start_hour: int = 0) -> ImputationResult:
        """Fit on the sequence and complete it."""
        self.fitted_ = True
        if self.flat:
            return self.imputer.fit_transform(values)
        matrix = self._matrix(values, start_hour)
        return self._flatten(self.imputer.fit_transform(matrix), values, matrix)

    def transform(self, values: np.ndarray, start_hour: int = 0) -> ImputationResult:
        """Complete a sequence with the fitted state."""
        if self.flat:
            return self.imputer.transform(values)
        matrix = self._matrix(values, start_hour)
        return self._flatten(self.imputer.transform(matrix), values, matrix)

