"""
Series operations: calendar arithmetic, the forward shift, the chronological
split and the log + min-max normalization.
"""

import calendar
import logging
from typing import Sequence, Tuple, Union

import numpy as np

from app.errors import (
    DegenerateNormalizerError,
    InvalidHorizonError,
    InvalidSplitError,
    NumericDomainError,
)
from app.services.series.schemas import HourlySeries, NormalizationParams, PredictionDataset

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24
HOURS_PER_YEAR = 8760

ArrayLike = Union[float, np.ndarray]


def hours_in_span(start_year: int, end_year: int) -> int:
    """Hours from Jan 1 of start_year through Dec 31 of end_year."""
    if start_year > end_year:
        return 0
    days = sum(366 if calendar.isleap(year) else 365 for year in range(start_year, end_year + 1))
    return HOURS_PER_DAY * days


def shift_pair(series: HourlySeries, horizon_hours: int) -> PredictionDataset:
    """
    Pair every hour with the hour `horizon_hours` later.

    Args:
        series: Source hourly series
        horizon_hours: Forward shift in hours

    Returns:
        Dataset of length len(series) - horizon_hours with raw values
    """
    if horizon_hours <= 0 or horizon_hours >= len(series):
        raise InvalidHorizonError(
            f"Horizon {horizon_hours} h needs a series longer than it (got {len(series)} h)"
        )
    length = len(series) - horizon_hours
    return PredictionDataset(
        inputs=series.values[:length].copy(),
        targets=series.values[horizon_hours:].copy(),
        input_mask=series.observed[:length].copy(),
        target_mask=series.observed[horizon_hours:].copy(),
        horizon_hours=horizon_hours,
        start=series.start,
    )


def split_train_test(
    dataset: PredictionDataset, test_hours: int
) -> Tuple[PredictionDataset, PredictionDataset]:
    """Chronological split: the last `test_hours` positions form the test set."""
    if test_hours <= 0 or test_hours >= len(dataset):
        raise InvalidSplitError(
            f"Test span of {test_hours} h must be shorter than the dataset ({len(dataset)} h)"
        )
    cut = len(dataset) - test_hours
    return dataset.slice(0, cut), dataset.slice(cut, len(dataset))


def fit_normalizer(values: Sequence) -> NormalizationParams:
    """
    Fit min-max bounds of log(1 + v) over present training values.

    Args:
        values: Training values; None or NaN marks a missing value

    Returns:
        Fitted normalization parameters
    """
    array = np.array([np.nan if v is None else v for v in values], dtype=np.float64)
    present = array[~np.isnan(array)]
    if present.size == 0:
        raise DegenerateNormalizerError("No present values to fit the normalizer on")
    if np.any(present < 0) or not np.all(np.isfinite(present)):
        raise NumericDomainError("Normalizer values must be finite and non-negative")
    logged = np.log1p(present)
    x_min, x_max = float(logged.min()), float(logged.max())
    if x_max <= x_min:
        raise DegenerateNormalizerError(f"Constant training data (log value {x_min})")
    logger.debug(f"Normalizer fitted on {present.size} values: [{x_min:.6f}, {x_max:.6f}]")
    return NormalizationParams(log_applied=True, x_min=x_min, x_max=x_max)


def transform(value: ArrayLike, params: NormalizationParams) -> ArrayLike:
    """Scale log(1 + v) into [0, 1] by the training range; no clipping."""
    array = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise NumericDomainError("Cannot normalize a non-finite value")
    if np.any(array < 0):
        raise NumericDomainError("Cannot normalize a negative volume")
    logged = np.log1p(array) if params.log_applied else array
    scaled = (logged - params.x_min) / (params.x_max - params.x_min)
    return float(scaled) if np.ndim(scaled) == 0 else scaled


def inverse_transform(value: ArrayLike, params: NormalizationParams) -> ArrayLike:
    """Map a normalized value back to a raw volume."""
    array = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise NumericDomainError("Cannot denormalize a non-finite value")
    logged = array * (params.x_max - params.x_min) + params.x_min
    raw = np.expm1(logged) if params.log_applied else logged
    return float(raw) if np.ndim(raw) == 0 else raw


def missing_by_year(series: HourlySeries) -> dict:
    """Missing percentage per calendar year covered by the series."""
    years = series.timestamps.year
    result = {}
    for year in np.unique(years):
        in_year = years == year
        result[int(year)] = 100.0 * float((~series.observed[in_year]).sum()) / int(in_year.sum())
    return result
