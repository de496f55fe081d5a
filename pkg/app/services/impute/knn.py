"""
K-nearest-neighbour imputation over day rows.

Distances use the columns observed in both rows, scaled by sqrt(24 / shared)
so rows with fewer shared columns are comparable.
"""

import logging
import numpy as np

from app.errors import NoObservedDataError
from app.services.impute.schemas import DayMatrix, ImputationResult

logger = logging.getLogger(__name__)


def row_distances(
    row: np.ndarray, row_observed: np.ndarray, donors: np.ndarray, donors_observed: np.ndarray
) -> np.ndarray:
    """Overlap-scaled Euclidean distance from one row to every donor row."""
    shared = donors_observed & row_observed
    diff = np.where(shared, donors - np.where(row_observed, row, 0.0), 0.0)
    squared = np.sum(diff * diff, axis=1)
    counts = shared.sum(axis=1)
    distances = np.full(len(donors), np.inf)
    overlap = counts > 0
    distances[overlap] = np.sqrt(squared[overlap] * row.shape[0] / counts[overlap])
    return distances


class KnnImputer:
    """Average of the k nearest donor rows that observe the missing cell."""

    def __init__(self, k: int = 5):
        self.k = k
        self.donors_ = None
        self.donors_observed_ = None

    def fit(self, matrix: DayMatrix) -> "KnnImputer":
        self.donors_ = matrix.cells
        self.donors_observed_ = matrix.observed_mask
        return self

    def transform(self, matrix: DayMatrix, exclude_self: bool = False) -> ImputationResult:
        """
        Fill the missing cells of a matrix from the fitted donors.

        Args:
            matrix: Matrix to complete
            exclude_self: Row i never donates to itself (the matrix is the donor set)

        Returns:
            Completed matrix; `fallback` is set when a cell had fewer than k candidates
        """
        cells, observed = matrix.cells, matrix.observed_mask
        donors, donors_observed = self.donors_, self.donors_observed_
        filled = cells.copy()
        fallback = False
        for i in np.flatnonzero((~observed).any(axis=1)):
            distances = row_distances(cells[i], observed[i], donors, donors_observed)
            for j in np.flatnonzero(~observed[i]):
                candidates = donors_observed[:, j].copy()
                if exclude_self:
                    candidates[i] = False
                indices = np.flatnonzero(candidates)
                if len(indices) == 0:
                    raise NoObservedDataError(f"No donor row observes column {int(j)}")
                if len(indices) < self.k:
                    fallback = True
                # Stable sort keeps the lower row index first on equal distances
                order = np.argsort(distances[indices], kind="stable")
                nearest = indices[order[: self.k]]
                filled[i, j] = np.mean(donors[nearest, j])
        if fallback:
            logger.warning(f"KNN used fewer than {self.k} neighbours for some cells")
        return ImputationResult(
            filled=filled,
            filled_positions=np.flatnonzero(~observed),
            method="knn",
            fallback=fallback,
        )

    def fit_transform(self, matrix: DayMatrix) -> ImputationResult:
        return self.fit(matrix).transform(matrix, exclude_self=True)


def impute_knn(matrix: DayMatrix, k: int = 5) -> ImputationResult:
    """
    KNN imputation of a day matrix.

    Args:
        matrix: Day matrix with missing cells
        k: Number of neighbours averaged per cell

    Returns:
        Completed matrix
    """
    return KnnImputer(k=k).fit_transform(matrix)

