"""
Side-by-side accuracy of the imputation treatments against ground truth.
"""

import logging
from typing import Iterable, List

import numpy as np

from app.errors import UsageError
from app.services.impute.registry import SeriesImputer
from app.services.impute.schemas import ImputationBenchmarkRow, Treatment
from app.services.series.schemas import HourlySeries

logger = logging.getLogger(__name__)

IMPUTATIONS = [treatment for treatment in Treatment if treatment.is_imputation]


def impute_series(series: HourlySeries, treatment: Treatment, seed: int = 0):
    """
    Complete a raw series; imputation runs on log(1 + v).

    Returns:
        (completed series, imputation result in log space)
    """
    logged = np.log1p(series.values)
    result = SeriesImputer(treatment, seed=seed).fit_transform(logged, series.start.hour)
    raw = np.where(series.observed, series.values, np.maximum(np.expm1(result.filled), 0.0))
    return series.with_values(raw), result


def rmse_on_gaps(completed: HourlySeries, truth: HourlySeries, gaps: np.ndarray) -> float:
    if not gaps.any():
        return 0.0
    error = completed.values[gaps] - truth.values[gaps]
    return float(np.sqrt(np.mean(error * error)))


def benchmark_imputers(
    gappy: HourlySeries,
    complete: HourlySeries,
    methods: Iterable[Treatment] = IMPUTATIONS,
    seed: int = 0,
) -> List[ImputationBenchmarkRow]:
    """
    Run every imputation treatment on the same gappy series.

    Args:
        gappy: Series with missing hours
        complete: Ground truth for the same hours
        methods: Treatments to compare
        seed: Seed for the random forest

    Returns:
        One row per treatment with the RMSE over the imputed hours
    """
    if len(gappy) != len(complete) or gappy.start != complete.start:
        raise UsageError("Ground truth does not cover the same hours as the gappy series")
    gaps = ~gappy.observed
    rows = []
    for treatment in methods:
        if not treatment.is_imputation:
            continue
        completed, result = impute_series(gappy, treatment, seed=seed)
        rows.append(
            ImputationBenchmarkRow(
                method=treatment,
                filled_count=len(result.filled_positions),
                rmse=rmse_on_gaps(completed, complete, gaps),
                iterations_used=result.iterations_used,
                converged=result.converged,
            )
        )
        logger.info(f"{treatment.value}: RMSE {rows[-1].rmse:.3f} over {rows[-1].filled_count} hours")
    return rows
