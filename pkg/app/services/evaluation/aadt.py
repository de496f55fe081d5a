"""
AADT blocks and accuracy scoring of predicted against actual volumes.
"""

import calendar
import logging
from typing import Dict, List

import numpy as np
import pandas as pd

from app.errors import IncompleteActualsError, InvalidActualError, PartialYearError
from app.services.evaluation.schemas import YearBlock
from app.services.impute.central import impute_central
from app.services.series.core import missing_by_year
from app.services.series.schemas import HourlySeries

logger = logging.getLogger(__name__)


def compute_aadt(series: HourlySeries) -> List[YearBlock]:
    """
    Sum each calendar year and divide by its number of days.

    Args:
        series: Complete series starting at hour 0 of Jan 1 and covering whole years

    Returns:
        One block per year
    """
    start, end = series.start, series.end
    if (start.month, start.day, start.hour) != (1, 1, 0) or (end.month, end.day, end.hour) != (12, 31, 23):
        raise PartialYearError(f"Series {start} - {end} does not cover whole calendar years")
    years = series.timestamps.year.to_numpy()
    blocks = []
    for year in range(start.year, end.year + 1):
        in_year = years == year
        if not series.observed[in_year].all():
            raise IncompleteActualsError(f"Year {year} has missing hours", year=year)
        n_days = 366 if calendar.isleap(year) else 365
        total = float(series.values[in_year].sum())
        blocks.append(YearBlock(year=year, n_days=n_days, hourly_sum=total, aadt=total / n_days))
    return blocks


def accuracy(predicted_aadt: float, actual_aadt: float) -> float:
    """100 * (1 - relative absolute error)."""
    if not actual_aadt > 0:
        raise InvalidActualError(f"Actual AADT must be positive, got {actual_aadt}")
    return 100.0 * (1.0 - abs(predicted_aadt - actual_aadt) / actual_aadt)


def complete_actuals(actual: HourlySeries) -> HourlySeries:
    """Median-fill the gaps of an actual series so its AADT can be computed."""
    if actual.missing_count == 0:
        return actual
    result = impute_central(actual.values, "median")
    logger.info(f"Median-filled {len(result.filled_positions)} missing actual hours for {actual.station_id}")
    return actual.with_values(result.filled)


def hourly_mape(predicted: HourlySeries, actual: HourlySeries) -> float:
    """Mean absolute percentage error over observed actual hours."""
    observed = actual.observed & (actual.values > 0)
    error = np.abs(predicted.values[observed] - actual.values[observed]) / actual.values[observed]
    return float(100.0 * error.mean())


def score_years(predicted: HourlySeries, actual: HourlySeries) -> List[Dict]:
    """
    Per-year predicted and actual AADT with accuracy and missing percentage.

    Args:
        predicted: Complete predicted series over whole years
        actual: Actual series over the same hours, gaps allowed

    Returns:
        One dict per year
    """
    if predicted.start != actual.start or len(predicted) != len(actual):
        raise PartialYearError("Predicted and actual series cover different hours")
    missing = missing_by_year(actual)
    actual_blocks = compute_aadt(complete_actuals(actual))
    predicted_blocks = compute_aadt(predicted)
    return [
        {
            "year": mine.year,
            "predicted_aadt": mine.aadt,
            "actual_aadt": theirs.aadt,
            "accuracy_pct": accuracy(mine.aadt, theirs.aadt),
            "missing_pct": missing[mine.year],
        }
        for mine, theirs in zip(predicted_blocks, actual_blocks)
    ]


def year_end(year: int) -> pd.Timestamp:
    return pd.Timestamp(year=year, month=12, day=31, hour=23)
