"""
Random-forest iterative imputation (missForest style) over day rows.
"""

import logging
import math
from typing import Dict, Optional

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from app.services.impute.mice import check_observability
from app.services.impute.schemas import DayMatrix, ImputationResult

logger = logging.getLogger(__name__)

STOP_CHANGE = 1e-4


class ForestImputer:
    """
    Iteratively regress each incomplete column on the others with a random forest.

    Per-column forests are seeded from (seed, iteration, column), so results
    do not depend on `n_jobs`.
    """

    def __init__(
        self,
        trees: int = 50,
        iters: int = 5,
        seed: int = 0,
        leaf_size: int = 5,
        max_depth: Optional[int] = None,
        bootstrap: bool = True,
        n_jobs: Optional[int] = None,
    ):
        self.trees = trees
        self.iters = iters
        self.seed = seed
        self.leaf_size = leaf_size
        self.max_depth = max_depth
        self.bootstrap = bootstrap
        self.n_jobs = n_jobs
        self.means_ = None
        self.forests_: Dict[int, RandomForestRegressor] = {}
        self.completed_ = None
        self.iterations_ = 0
        self.converged_ = True

    def _forest(self, iteration: int, column: int, n_features: int) -> RandomForestRegressor:
        seed = int(np.random.SeedSequence([self.seed, iteration, column]).generate_state(1)[0])
        return RandomForestRegressor(
            n_estimators=self.trees,
            max_features=math.ceil(math.sqrt(n_features)),
            min_samples_leaf=self.leaf_size,
            max_depth=self.max_depth,
            bootstrap=self.bootstrap,
            random_state=seed,
            n_jobs=self.n_jobs,
        )

    def fit(self, matrix: DayMatrix) -> "ForestImputer":
        cells, observed = matrix.cells, matrix.observed_mask
        check_observability(observed)
        self.means_ = np.nanmean(cells, axis=0)
        completed = np.where(observed, cells, self.means_)
        incomplete = [j for j in range(cells.shape[1]) if not observed[:, j].all()]
        self.forests_ = {}
        self.iterations_ = 0
        self.converged_ = True
        if incomplete:
            self.converged_ = False
            missing = ~observed
            for iteration in range(self.iters):
                previous = completed[missing].copy()
                for j in incomplete:
                    rows = observed[:, j]
                    features = np.delete(completed, j, axis=1)
                    forest = self._forest(iteration, j, features.shape[1])
                    forest.fit(features[rows], cells[rows, j])
                    completed[~rows, j] = forest.predict(features[~rows])
                    self.forests_[j] = forest
                self.iterations_ = iteration + 1
                change = float(np.mean(np.abs(completed[missing] - previous)))
                logger.debug(f"Forest iteration {self.iterations_}: mean change {change:.6g}")
                if change < STOP_CHANGE:
                    self.converged_ = True
                    break
        self.completed_ = completed
        return self

    def transform(self, matrix: DayMatrix) -> ImputationResult:
        """Apply the fitted forests to a new matrix."""
        cells, observed = matrix.cells, matrix.observed_mask
        completed = np.where(observed, cells, self.means_)
        missing = ~observed
        passes = self.iterations_ if missing.any() else 0
        for _ in range(passes):
            previous = completed[missing].copy()
            for j, forest in self.forests_.items():
                rows = observed[:, j]
                if rows.all():
                    continue
                features = np.delete(completed[~rows], j, axis=1)
                completed[~rows, j] = forest.predict(features)
            if float(np.mean(np.abs(completed[missing] - previous))) < STOP_CHANGE:
                break
        return self._result(completed, observed)

    def fit_transform(self, matrix: DayMatrix) -> ImputationResult:
        self.fit(matrix)
        return self._result(self.completed_, matrix.observed_mask)

    def _result(self, completed: np.ndarray, observed: np.ndarray) -> ImputationResult:
        return ImputationResult(
            filled=completed,
            filled_positions=np.flatnonzero(~observed),
            method="rf",
            iterations_used=self.iterations_,
            converged=self.converged_,
        )


def impute_rf(matrix: DayMatrix, trees: int = 50, iters: int = 5, seed: int = 0, **options) -> ImputationResult:
    """
    Random-forest imputation of a day matrix.

    Args:
        matrix: Day matrix with missing cells
        trees: Trees per forest
        iters: Maximum passes over the incomplete columns
        seed: Seed for bootstrap samples and feature subsets
        **options: leaf_size, max_depth, bootstrap or n_jobs overrides

    Returns:
        Completed matrix
    """
    return ForestImputer(trees=trees, iters=iters, seed=seed, **options).fit_transform(matrix)
