import numpy as np
import pandas as pd
import pytest

from app.errors import IncompleteActualsError, InvalidActualError, PartialYearError, UsageError
from app.services.evaluation.aadt import accuracy, complete_actuals, compute_aadt, hourly_mape, score_years
from app.services.evaluation.grid import (
    best_variants,
    check_test_years,
    evaluate_variant,
    grid_configs,
    run_grid,
    run_multi_horizon,
    score_predictions,
    summarize_report,
)
from app.services.evaluation.schemas import EvaluationReport, ReportRow, TrendRecord
from app.services.evaluation.storage import (
    TABLE_COLUMNS,
    ReportFileStorage,
    export_trends,
    read_report_json,
    report_table,
    write_report_csv,
    write_report_json,
)
from app.services.forecast.schemas import ForecastConfig
from app.services.impute.schemas import Treatment
from app.services.ingest.schemas import SyntheticSpec
from app.services.ingest.synthetic import generate_synthetic
from app.services.neural.schemas import CellKind
from app.services.series.core import hours_in_span
from app.services.series.schemas import HourlySeries


def _year(year: int, volume, station_id: str = "atr-1") -> HourlySeries:
    values = np.full(hours_in_span(year, year), volume, dtype=np.float64)
    return HourlySeries.from_values(f"{year}-01-01", values, station_id=station_id)


def _row(cell, treatment, accuracy_pct, year=2017, horizon=8760, error=None) -> ReportRow:
    return ReportRow(
        station="atr-1",
        cell=cell,
        treatment=treatment,
        horizon_hours=horizon,
        year=year,
        accuracy_pct=None if error else accuracy_pct,
        error=error,
    )


def _report(rows, trends=()) -> EvaluationReport:
    return EvaluationReport(
        station="atr-1",
        functional_class="RuralInterstate",
        seed=0,
        base_config=ForecastConfig(),
        test_years=[2017],
        missing_pct=3.0,
        rows=list(rows),
        trends=list(trends),
    )


class TestAadt:
    def test_constant_year(self):
        [block] = compute_aadt(_year(2015, 100.0))
        assert (block.year, block.n_days, block.hourly_sum, block.aadt) == (2015, 365, 876000.0, 2400.0)

    def test_leap_year_divides_by_366(self):
        [block] = compute_aadt(_year(2016, 1.0))
        assert block.n_days == 366
        assert block.aadt == 24.0

    def test_two_years(self):
        series = HourlySeries.from_values("2015-01-01", np.ones(hours_in_span(2015, 2016)))
        assert [block.year for block in compute_aadt(series)] == [2015, 2016]

    @pytest.mark.parametrize("start, length", [("2015-01-02", 8736), ("2015-01-01", 8759), ("2015-01-01 01:00", 8760)])
    def test_partial_years_are_rejected(self, start, length):
        with pytest.raises(PartialYearError):
            compute_aadt(HourlySeries.from_values(start, np.ones(length)))

    def test_gaps_name_the_year(self):
        values = np.ones(hours_in_span(2015, 2016))
        values[9000] = np.nan
        with pytest.raises(IncompleteActualsError) as error:
            compute_aadt(HourlySeries.from_values("2015-01-01", values))
        assert error.value.year == 2016

    def test_scaling_the_volumes_scales_the_aadt(self):
        values = np.random.default_rng(1).uniform(10, 900, 8760)
        base = HourlySeries.from_values("2015-01-01", values)
        [plain] = compute_aadt(base)
        [scaled] = compute_aadt(base.with_values(values * 2.5))
        assert scaled.aadt == pytest.approx(2.5 * plain.aadt, rel=1e-12)


class TestAccuracy:
    @pytest.mark.parametrize(
        "predicted, actual, expected",
        [(2200, 2000, 90.0), (1800, 2000, 90.0), (2000, 2000, 100.0), (5000, 2000, -50.0)],
    )
    def test_examples(self, predicted, actual, expected):
        assert accuracy(predicted, actual) == pytest.approx(expected)

    @pytest.mark.parametrize("actual", [0.0, -5.0])
    def test_actual_must_be_positive(self, actual):
        with pytest.raises(InvalidActualError):
            accuracy(100.0, actual)

    def test_independent_of_units(self):
        assert accuracy(3.7 * 1234.0, 3.7 * 1500.0) == pytest.approx(accuracy(1234.0, 1500.0), rel=1e-12)


class TestScoring:
    def test_score_years(self):
        predicted, actual = _year(2016, 110.0), _year(2016, 100.0)
        [scores] = score_years(predicted, actual)
        assert scores["year"] == 2016
        assert scores["predicted_aadt"] == pytest.approx(2640.0)
        assert scores["actual_aadt"] == pytest.approx(2400.0)
        assert scores["accuracy_pct"] == pytest.approx(90.0)
        assert scores["missing_pct"] == 0.0
        assert hourly_mape(predicted, actual) == pytest.approx(10.0)

    def test_gappy_actuals_are_median_filled(self):
        values = np.full(8760, 100.0)
        values[:876] = np.nan
        actual = HourlySeries.from_values("2015-01-01", values)
        filled = complete_actuals(actual)
        assert filled.missing_count == 0
        assert np.all(filled.values == 100.0)
        [scores] = score_years(_year(2015, 100.0), actual)
        assert scores["accuracy_pct"] == pytest.approx(100.0)
        assert scores["missing_pct"] == pytest.approx(10.0)

    def test_mismatched_spans(self):
        with pytest.raises(PartialYearError):
            score_years(_year(2015, 1.0), _year(2016, 1.0))

    def test_rows_carry_the_variant(self):
        config = ForecastConfig(cell_kind="gru", treatment="knn", seed=4)
        [row] = score_predictions(_year(2015, 90.0), _year(2015, 100.0), config)
        assert (row.cell, row.treatment, row.horizon_hours, row.seed) == (CellKind.GRU, Treatment.KNN, 8760, 4)
        assert row.accuracy_pct == pytest.approx(90.0)
        assert row.succeeded


class TestTestYears:
    def test_consecutive_years_ending_the_series(self, three_year_station):
        gappy, _ = three_year_station
        assert check_test_years(gappy, [2016, 2017]) == 17544
        assert check_test_years(gappy, [2017]) == 8760

    @pytest.mark.parametrize("years", [[2015, 2017], [2016], []])
    def test_rejected_years(self, three_year_station, years):
        gappy, _ = three_year_station
        with pytest.raises(UsageError):
            check_test_years(gappy, years)

    def test_grid_has_every_variant_once(self):
        configs = grid_configs(ForecastConfig(), 8760)
        assert len(configs) == 21
        assert len({config.label for config in configs}) == 21
        assert all(config.test_hours == 8760 for config in configs)


class TestBestVariants:
    def test_ties_prefer_the_earlier_treatment_then_cell(self):
        report = _report(
            [
                _row(CellKind.GRU, Treatment.MEAN, 90.0),
                _row(CellKind.LSTM, Treatment.MASKING, 90.0),
                _row(CellKind.SIMPLE_RNN, Treatment.KNN, 85.0),
                _row(CellKind.LSTM, Treatment.RF, 95.0, year=2016),
                _row(CellKind.GRU, Treatment.RF, 95.0, year=2016),
                _row(CellKind.SIMPLE_RNN, Treatment.RF, None, year=2016, error="DataError: boom"),
            ]
        )
        best = {variant.year: variant for variant in best_variants(report)}
        assert (best[2017].cell, best[2017].treatment) == (CellKind.LSTM, Treatment.MASKING)
        assert (best[2016].cell, best[2016].treatment) == (CellKind.GRU, Treatment.RF)
        assert [variant.year for variant in best_variants(report)] == [2016, 2017]

    def test_summary(self):
        report = _report(
            [
                _row(CellKind.GRU, Treatment.MASKING, 80.0),
                _row(CellKind.LSTM, Treatment.MASKING, 90.0),
                _row(CellKind.LSTM, Treatment.MEAN, 70.0),
                _row(CellKind.GRU, Treatment.MEAN, None, error="NumericError: nan"),
            ]
        )
        summary = summarize_report(report)
        assert summary.masking_mean_pct == pytest.approx(85.0)
        assert summary.imputation_mean_pct == pytest.approx(70.0)
        assert [(line.group, line.variants) for line in summary.by_cell] == [("Gru", 1), ("Lstm", 2)]
        assert [line.group for line in summary.by_treatment] == ["Masking", "Mean"]
        assert summary.by_cell[1].mean_accuracy_pct == pytest.approx(80.0)


class TestExperiments:
    def test_treatments_tie_without_gaps(self, gap_free_station, tiny_config):
        report = run_grid(gap_free_station, tiny_config, [2017])
        assert len(report.rows) == 21
        assert all(row.succeeded for row in report.rows)
        for cell in CellKind:
            accuracies = {row.accuracy_pct for row in report.rows if row.cell is cell}
            assert len(accuracies) == 1
        assert report.missing_pct == 0.0
        # One actual trend plus one per variant
        assert len(report.trends) == 22

    def test_horizons_without_history_are_skipped(self, three_year_station, tiny_config):
        gappy, _ = three_year_station
        report = run_multi_horizon(gappy, tiny_config, [2017], keep_trends=False)
        assert [skip.horizon_hours for skip in report.skipped] == [17520, 26280]
        assert {row.horizon_hours for row in report.rows} == {8760}
        assert len(report.rows) == 1
        assert report.rows[0].succeeded
        assert report.rows[0].missing_pct > 0
        assert report.trends == []

    @pytest.mark.slow
    def test_grid_is_reproducible_and_parallel_safe(self, three_year_station, tiny_config):
        gappy, _ = three_year_station
        serial = run_grid(gappy, tiny_config, [2017], n_jobs=1, keep_trends=False)
        parallel = run_grid(gappy, tiny_config, [2017], n_jobs=2, keep_trends=False)
        assert [row.model_dump() for row in serial.rows] == [row.model_dump() for row in parallel.rows]

    @pytest.mark.slow
    def test_trained_grid_beats_a_coin_toss(self, three_year_station):
        gappy, _ = three_year_station
        config = ForecastConfig(test_hours=8760, hidden_size=8, epochs=5, learning_rate=0.01, rf_trees=10, rf_iters=2)
        report = run_grid(gappy, config, [2017], keep_trends=False)
        assert all(row.succeeded for row in report.rows)
        assert max(row.accuracy_pct for row in report.rows) > 80.0


class TestForecastQuality:
    """Seeded synthetic stations: daily, weekly and yearly seasonality, 2% growth, 5% noise, 3% MCAR gaps."""

    @pytest.mark.slow
    def test_year_ahead_lstm_median(self):
        gappy, _ = generate_synthetic(SyntheticSpec(years=5, start_year=2013, missing_rate=0.03, seed=1))
        config = ForecastConfig(cell_kind="lstm", treatment="median", test_hours=8760)
        [row], predicted = evaluate_variant(gappy, config, [2017])
        assert predicted is not None
        assert row.year == 2017
        assert row.accuracy_pct >= 97.0
        assert row.hourly_mape <= 10.0

    @pytest.mark.slow
    def test_accuracy_does_not_grow_with_the_horizon(self):
        gappy, _ = generate_synthetic(SyntheticSpec(years=7, start_year=2011, missing_rate=0.03, seed=1))
        report = run_multi_horizon(gappy, ForecastConfig(), [2017], n_jobs=3, keep_trends=False)
        assert report.skipped == []
        by_horizon = {row.horizon_hours: row.accuracy_pct for row in report.rows}
        accuracies = [by_horizon[horizon] for horizon in (8760, 17520, 26280)]
        for nearer, farther in zip(accuracies, accuracies[1:]):
            assert farther <= nearer + 1.0


class TestReportFiles:
    def _filled_report(self):
        rows = [
            _row(CellKind.LSTM, Treatment.MEDIAN, 92.5),
            _row(CellKind.GRU, Treatment.EM, None, error="DataError: singular"),
        ]
        trends = [
            TrendRecord(horizon_hours=8760, start="2017-01-01T00", values=[10.0, None, 12.0]),
            TrendRecord(
                horizon_hours=8760,
                cell=CellKind.LSTM,
                treatment=Treatment.MEDIAN,
                start="2017-01-01T00",
                values=[9.0, 11.0, 13.0],
            ),
        ]
        return _report(rows, trends)

    def test_json_round_trip(self, tmp_path):
        report = self._filled_report()
        path = tmp_path / "reports" / "grid.json"
        write_report_json(report, str(path))
        assert read_report_json(str(path)) == report

    def test_table(self, tmp_path):
        report = self._filled_report()
        table = report_table(report)
        assert list(table.columns) == TABLE_COLUMNS + ["hourly_mape", "error"]
        assert table["cell"].tolist() == ["Lstm", "Gru"]
        path = tmp_path / "grid.csv"
        write_report_csv(report, str(path))
        parsed = pd.read_csv(path)
        assert parsed["accuracy_pct"].iloc[0] == 92.5
        assert np.isnan(parsed["accuracy_pct"].iloc[1])
        assert parsed["error"].iloc[1] == "DataError: singular"

    def test_trend_export(self, tmp_path):
        paths = export_trends(self._filled_report(), str(tmp_path / "trends"))
        names = sorted(path.rsplit("/", 1)[-1] for path in paths)
        assert names == ["atr-1-Lstm-Median-h8760.csv", "atr-1-actual-h8760.csv"]
        actual = (tmp_path / "trends" / "atr-1-actual-h8760.csv").read_text().splitlines()
        assert actual[0] == "timestamp,value"
        assert actual[1] == "2017-01-01T00,10.0"
        assert actual[2] == "2017-01-01T01,"
        assert actual[3] == "2017-01-01T02,12.0"

    def test_storage(self, tmp_path):
        storage = ReportFileStorage(str(tmp_path))
        report = self._filled_report()
        report_id = storage.save_report(report)
        assert storage.get_report(report_id) == report
        assert (tmp_path / f"{report_id}.csv").exists()
        assert storage.get_report("missing") is None
