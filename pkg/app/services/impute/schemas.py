"""
Imputation schemas: treatments, the day-by-hour matrix and imputation results.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List

import numpy as np
from pydantic import BaseModel

HOURS = 24


class Treatment(str, Enum):
    """Missing-data treatments, in tie-breaking order."""

    MASKING = "Masking"
    MEAN = "Mean"
    MEDIAN = "Median"
    EM = "Em"
    MICE = "Mice"
    KNN = "Knn"
    RF = "Rf"

    @property
    def rank(self) -> int:
        return list(Treatment).index(self)

    @property
    def is_imputation(self) -> bool:
        return self is not Treatment.MASKING

    @classmethod
    def parse(cls, name: str) -> "Treatment":
        for treatment in cls:
            if treatment.value.lower() == name.strip().lower():
                return treatment
        raise ValueError(f"Unknown treatment '{name}'")


@dataclass(frozen=True)
class DayMatrix:
    """
    Day-by-hour reshaping of an hourly series.

    Row r, column c holds hour index r * 24 + c - start_offset; cells before
    the first hour or after the last one are padding and count as missing.
    """

    cells: np.ndarray
    observed_mask: np.ndarray
    padding: np.ndarray
    start_offset: int = 0
    length: int = 0

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def missing_count(self) -> int:
        return int((~self.observed_mask).sum())

    def with_cells(self, cells: np.ndarray) -> "DayMatrix":
        """Same layout with new cell values; NaN marks a missing cell."""
        cells = np.array(cells, dtype=np.float64, copy=True)
        return DayMatrix(
            cells=cells,
            observed_mask=~np.isnan(cells),
            padding=self.padding,
            start_offset=self.start_offset,
            length=self.length,
        )


@dataclass(frozen=True)
class ImputationResult:
    """
    Completed values plus bookkeeping.

    `filled` has the shape of the input; `filled_positions` are flat indices
    into it.
    """

    filled: np.ndarray
    filled_positions: np.ndarray
    method: str
    iterations_used: int = 0
    converged: bool = True
    fallback: bool = False


@dataclass(frozen=True)
class EmModel:
    mean: np.ndarray
    covariance: np.ndarray
    log_likelihood_trace: List[float] = field(default_factory=list)


class ImputationBenchmarkRow(BaseModel):
    method: Treatment
    filled_count: int
    rmse: float
    iterations_used: int
    converged: bool
