"""
Evaluation harness: scoring a trained model on its test years, the
cell-kind x treatment grid and the multi-year horizon experiment.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import ForecastError, UsageError
from app.services.evaluation.aadt import hourly_mape, score_years, year_end
from app.services.evaluation.schemas import (
    BestVariant,
    EvaluationReport,
    ReportRow,
    ReportSummary,
    SkipRecord,
    SummaryLine,
    TrendRecord,
)
from app.services.forecast.pipeline import predict, train
from app.services.forecast.schemas import ForecastConfig, TrainedModel
from app.services.impute.schemas import Treatment
from app.services.ingest.csv_io import TIMESTAMP_FORMAT
from app.services.neural.schemas import CellKind
from app.services.series.core import HOURS_PER_YEAR, hours_in_span
from app.services.series.schemas import HourlySeries

logger = logging.getLogger(__name__)

HORIZONS = (HOURS_PER_YEAR, 2 * HOURS_PER_YEAR, 3 * HOURS_PER_YEAR)


def forecast_span(series: HourlySeries, config: ForecastConfig) -> Tuple[HourlySeries, HourlySeries]:
    """(model inputs, actual volumes) for the final `test_hours` target hours."""
    length = len(series) - config.horizon_hours
    inputs = series.slice(length - config.test_hours, length)
    actual = series.slice(len(series) - config.test_hours, len(series))
    return inputs, actual


def score_predictions(predicted: HourlySeries, actual: HourlySeries, config: ForecastConfig) -> List[ReportRow]:
    """Report rows for one variant from its predicted and actual test series."""
    mape = hourly_mape(predicted, actual)
    return [
        ReportRow(
            station=actual.station_id,
            cell=config.cell_kind,
            treatment=config.treatment,
            horizon_hours=config.horizon_hours,
            seed=config.seed,
            hourly_mape=mape,
            **scores,
        )
        for scores in score_years(predicted, actual)
    ]


def score_model(model: TrainedModel, series: HourlySeries) -> Tuple[List[ReportRow], HourlySeries, HourlySeries]:
    """
    Predict the test years of a series with a trained model and score them.

    Returns:
        (report rows, predicted test series, actual test series)
    """
    inputs, actual = forecast_span(series, model.config)
    predicted = predict(model, inputs)
    return score_predictions(predicted, actual, model.config), predicted, actual


def evaluate_variant(series: HourlySeries, config: ForecastConfig, test_years: Sequence[int]):
    """
    Train and score one variant; failures become error rows.

    Returns:
        (report rows, predicted test series or None)
    """
    try:
        model = train(series, config)
        rows, predicted, _ = score_model(model, series)
        logger.info(
            f"{config.label} h={config.horizon_hours}: "
            + ", ".join(f"{row.year} {row.accuracy_pct:.2f}%" for row in rows)
        )
        return rows, predicted
    except (ForecastError, ValueError, np.linalg.LinAlgError) as e:
        logger.error(f"{config.label} h={config.horizon_hours} failed: {e}")
        rows = [
            ReportRow(
                station=series.station_id,
                cell=config.cell_kind,
                treatment=config.treatment,
                horizon_hours=config.horizon_hours,
                year=year,
                seed=config.seed,
                error=f"{type(e).__name__}: {e}",
            )
            for year in test_years
        ]
        return rows, None


def _evaluate_job(job):
    return evaluate_variant(*job)


def check_test_years(series: HourlySeries, test_years: Sequence[int]) -> int:
    """Validate that the test years are consecutive and end the series; return their hours."""
    years = sorted(set(test_years))
    if not years or years != list(range(years[0], years[-1] + 1)):
        raise UsageError(f"Test years must be consecutive, got {list(test_years)}")
    if series.end != year_end(years[-1]):
        raise UsageError(f"Series ends {series.end}, expected the end of {years[-1]}")
    return hours_in_span(years[0], years[-1])


def _run_jobs(jobs: List[tuple], n_jobs: int) -> List[tuple]:
    if n_jobs <= 1 or len(jobs) <= 1:
        return [_evaluate_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as executor:
        # map keeps submission order whatever the completion order
        return list(executor.map(_evaluate_job, jobs))


def _new_report(series: HourlySeries, base_config: ForecastConfig, test_years: Sequence[int]) -> EvaluationReport:
    return EvaluationReport(
        station=series.station_id,
        functional_class=series.functional_class,
        seed=base_config.seed,
        base_config=base_config,
        test_years=sorted(set(test_years)),
        missing_pct=100.0 * series.missing_fraction,
    )


def _trend(config: Optional[ForecastConfig], horizon: int, series: HourlySeries) -> TrendRecord:
    return TrendRecord(
        horizon_hours=horizon,
        cell=config.cell_kind if config else None,
        treatment=config.treatment if config else None,
        start=series.start.strftime(TIMESTAMP_FORMAT),
        values=[None if np.isnan(value) else float(value) for value in series.values],
    )


def _collect(report, series, configs, results, keep_trends):
    horizons_seen = set()
    for config, (rows, predicted) in zip(configs, results):
        report.rows.extend(rows)
        if keep_trends and predicted is not None:
            if config.horizon_hours not in horizons_seen:
                _, actual = forecast_span(series, config)
                report.trends.append(_trend(None, config.horizon_hours, actual))
                horizons_seen.add(config.horizon_hours)
            report.trends.append(_trend(config, config.horizon_hours, predicted))


def grid_configs(base_config: ForecastConfig, test_hours: int) -> List[ForecastConfig]:
    """All cell kind x treatment variants of a base config, in report order."""
    return [
        base_config.model_copy(update={"cell_kind": cell, "treatment": treatment, "test_hours": test_hours})
        for cell in CellKind
        for treatment in Treatment
    ]


def run_grid(
    series: HourlySeries,
    base_config: ForecastConfig,
    test_years: Sequence[int],
    n_jobs: int = 1,
    keep_trends: bool = True,
) -> EvaluationReport:
    """
    Train and score every cell kind x treatment variant.

    Args:
        series: Station history ending with the test years
        base_config: Shared settings; cell kind and treatment are overridden
        test_years: Consecutive years at the end of the series to forecast
        n_jobs: Parallel trainings
        keep_trends: Keep the hourly predicted and actual trends in the report

    Returns:
        Report with one row per variant and test year
    """
    test_hours = check_test_years(series, test_years)
    configs = grid_configs(base_config, test_hours)
    jobs = [(series, config, test_years) for config in configs]
    report = _new_report(series, base_config, test_years)
    _collect(report, series, configs, _run_jobs(jobs, n_jobs), keep_trends)
    return report


def run_multi_horizon(
    series: HourlySeries,
    base_config: ForecastConfig,
    test_years: Sequence[int],
    horizons: Iterable[int] = HORIZONS,
    n_jobs: int = 1,
    keep_trends: bool = True,
) -> EvaluationReport:
    """
    Repeat train/predict/score of the base variant for several horizons.

    Horizons without enough history for one training window are skipped
    with the reason recorded.
    """
    test_hours = check_test_years(series, test_years)
    report = _new_report(series, base_config, test_years)
    configs = []
    for horizon in horizons:
        train_hours = len(series) - horizon - test_hours
        if train_hours < base_config.window_length:
            reason = f"{max(train_hours, 0)} training hours left, need {base_config.window_length}"
            report.skipped.append(SkipRecord(horizon_hours=horizon, reason=reason))
            logger.warning(f"Horizon {horizon} h skipped: {reason}")
            continue
        configs.append(base_config.model_copy(update={"horizon_hours": horizon, "test_hours": test_hours}))
    jobs = [(series, config, test_years) for config in configs]
    _collect(report, series, configs, _run_jobs(jobs, n_jobs), keep_trends)
    return report


def best_variants(report: EvaluationReport) -> List[BestVariant]:
    """
    Highest accuracy per horizon and year; ties go to the earlier treatment,
    then the earlier cell kind.
    """
    best = {}
    for row in report.rows:
        if not row.succeeded:
            continue
        key = (row.horizon_hours, row.year)
        rank = (-row.accuracy_pct, row.treatment.rank, row.cell.rank)
        if key not in best or rank < best[key][0]:
            best[key] = (rank, row)
    return [
        BestVariant(
            horizon_hours=row.horizon_hours,
            year=row.year,
            cell=row.cell,
            treatment=row.treatment,
            accuracy_pct=row.accuracy_pct,
        )
        for _, (_, row) in sorted(best.items())
    ]


def _mean_lines(rows: List[ReportRow], key) -> List[SummaryLine]:
    groups = {}
    for row in rows:
        groups.setdefault(key(row), []).append(row.accuracy_pct)
    return [
        SummaryLine(group=group.value, mean_accuracy_pct=float(np.mean(values)), variants=len(values))
        for group, values in sorted(groups.items(), key=lambda item: item[0].rank)
    ]


def summarize_report(report: EvaluationReport) -> ReportSummary:
    """Mean accuracy per cell kind, per treatment, and masking against imputation."""
    rows = [row for row in report.rows if row.succeeded]
    masking = [row.accuracy_pct for row in rows if row.treatment is Treatment.MASKING]
    imputation = [row.accuracy_pct for row in rows if row.treatment.is_imputation]
    return ReportSummary(
        by_cell=_mean_lines(rows, lambda row: row.cell),
        by_treatment=_mean_lines(rows, lambda row: row.treatment),
        masking_mean_pct=float(np.mean(masking)) if masking else None,
        imputation_mean_pct=float(np.mean(imputation)) if imputation else None,
    )
