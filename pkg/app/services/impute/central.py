"""
Mean and median imputation.
"""

import logging
from typing import Literal, Sequence

import numpy as np

from app.errors import NoObservedDataError
from app.services.impute.matrix import as_float_array
from app.services.impute.schemas import ImputationResult

logger = logging.getLogger(__name__)


class CentralImputer:
    """Fill every gap with the mean or median of the observed values."""

    def __init__(self, statistic: Literal["mean", "median"] = "mean"):
        if statistic not in ("mean", "median"):
            raise ValueError(f"Unknown statistic '{statistic}'")
        self.statistic = statistic
        self.value_ = None

    def fit(self, values: np.ndarray) -> "CentralImputer":
        present = values[~np.isnan(values)]
        if present.size == 0:
            raise NoObservedDataError("Cannot impute: no observed values")
        if self.statistic == "mean":
            self.value_ = float(present.sum() / present.size)
        else:
            self.value_ = float(np.median(present))
        return self

    def transform(self, values: np.ndarray) -> ImputationResult:
        missing = np.isnan(values)
        filled = np.where(missing, self.value_, values)
        return ImputationResult(
            filled=filled,
            filled_positions=np.flatnonzero(missing),
            method=self.statistic,
        )

    def fit_transform(self, values: np.ndarray) -> ImputationResult:
        return self.fit(values).transform(values)


def impute_central(series: Sequence, statistic: Literal["mean", "median"] = "mean") -> ImputationResult:
    """
    Mean or median imputation of a sequence.

    Args:
        series: Values, None or NaN where missing
        statistic: "mean" or "median"

    Returns:
        Completed sequence
    """
    return CentralImputer(statistic).fit_transform(as_float_array(series))
