import numpy as np
import pandas as pd
import pytest

from app.errors import ForbiddenPathError, MalformedSeriesError, ZeroVolumeError
from app.services.evaluation.aadt import compute_aadt
from app.services.ingest.csv_io import (
    format_csv,
    parse_csv,
    parse_csv_text,
    resolve_data_path,
    summarize,
    write_csv,
)
from app.services.ingest.schemas import STATION_PRESETS, SyntheticSpec
from app.services.ingest.synthetic import generate_synthetic
from app.services.series.schemas import FunctionalClass, HourlySeries


class TestParseCsv:
    def test_missing_cell(self):
        series = parse_csv_text("timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,NaN\n")
        assert len(series) == 2
        assert series.start == pd.Timestamp("2008-01-01")
        assert series.values[0] == 120
        assert series.observed.tolist() == [True, False]

    @pytest.mark.parametrize("marker", ["nan", "NAN", ""])
    def test_missing_marker_variants(self, marker):
        series = parse_csv_text(f"timestamp,volume\n2008-01-01T00,{marker}\n2008-01-01T01,5\n")
        assert series.observed.tolist() == [False, True]

    def test_skipped_hour_names_the_line(self):
        text = "timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,121\n2008-01-01T03,122\n"
        with pytest.raises(MalformedSeriesError) as error:
            parse_csv_text(text)
        assert error.value.line == 4

    def test_disorder_is_malformed(self):
        text = "timestamp,volume\n2008-01-01T01,120\n2008-01-01T00,121\n"
        with pytest.raises(MalformedSeriesError) as error:
            parse_csv_text(text)
        assert error.value.line == 3

    def test_zero_volume_names_the_line(self):
        with pytest.raises(ZeroVolumeError) as error:
            parse_csv_text("timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,0\n")
        assert error.value.line == 3
        assert error.value.to_dict() == {"error": "zero_volume", "message": error.value.message, "line": 3}

    def test_extra_field_names_the_line(self):
        with pytest.raises(MalformedSeriesError) as error:
            parse_csv_text("timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,130,7\n")
        assert error.value.line == 3
        assert "\n" not in error.value.message

    def test_wrong_header_is_not_echoed(self):
        with pytest.raises(MalformedSeriesError) as error:
            parse_csv_text("API_KEY=abc123\n")
        assert error.value.line == 1
        assert "abc123" not in error.value.message

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "time,count\n2008-01-01T00,1\n",
            "timestamp,volume\n",
            "timestamp,volume\nyesterday,1\n",
            "timestamp,volume\n2008-01-01T00,many\n",
            "timestamp,volume\n2008-01-01T00,-4\n",
        ],
    )
    def test_malformed_files(self, text):
        with pytest.raises(MalformedSeriesError):
            parse_csv_text(text)

    def test_station_defaults_to_file_name(self, tmp_path):
        path = tmp_path / "atr-21.csv"
        path.write_text("timestamp,volume\n2008-01-01T00,120\n")
        assert parse_csv(str(path)).station_id == "atr-21"
        assert parse_csv(str(path), station_id="x").station_id == "x"

    def test_round_trip_keeps_values_and_gaps(self, tmp_path):
        values = [120.0, None, 3.25, 1e-3, 7.0, None, 123456789.0]
        series = HourlySeries.from_values("2016-02-29 22:00", values, station_id="atr-1")
        path = tmp_path / "out" / "atr-1.csv"
        write_csv(series, str(path))
        parsed = parse_csv(str(path))
        assert parsed.start == series.start
        assert parsed.observed.tolist() == series.observed.tolist()
        present = series.observed
        assert parsed.values[present].tobytes() == series.values[present].tobytes()

    def test_format_writes_counts_as_integers(self):
        series = HourlySeries.from_values("2008-01-01", [120.0, None])
        assert format_csv(series) == "timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,NaN\n"

    def test_summary(self):
        series = HourlySeries.from_values("2008-12-31 22:00", [1, None, 3, 4], station_id="atr-2")
        summary = summarize(series)
        assert summary.length == 4
        assert summary.start == "2008-12-31T22"
        assert summary.end == "2009-01-01T01"
        assert summary.missing_pct == pytest.approx(25.0)
        assert summary.missing_pct_by_year == {2008: pytest.approx(50.0), 2009: 0.0}


class TestSyntheticGenerator:
    def test_no_missing_rate_gives_identical_series(self):
        gappy, complete = generate_synthetic(SyntheticSpec(years=1, missing_rate=0.0, seed=1))
        assert gappy.missing_count == 0
        assert np.array_equal(gappy.values, complete.values)

    def test_mcar_rate_is_met(self):
        gappy, complete = generate_synthetic(SyntheticSpec(years=4, missing_rate=0.03, gap_model="mcar", seed=2))
        assert len(gappy) == 35064
        assert abs(gappy.missing_fraction - 0.03) <= 0.005
        assert complete.missing_count == 0

    def test_burst_gaps_stay_within_budget(self):
        spec = SyntheticSpec(years=2, missing_rate=0.05, gap_model="burst", burst_mean_hours=12, seed=4)
        gappy, _ = generate_synthetic(spec)
        assert gappy.missing_fraction <= 0.06
        # Bursts leave runs of consecutive missing hours
        runs = np.diff(np.flatnonzero(~gappy.observed))
        assert (runs == 1).mean() > 0.5

    def test_flat_profile(self):
        spec = SyntheticSpec(
            years=2,
            start_year=2015,
            base_volume=500.0,
            daily_amplitude=0,
            weekly_amplitude=0,
            yearly_amplitude=0,
            growth_rate=0,
            noise_std=0,
            missing_rate=0,
        )
        _, complete = generate_synthetic(spec)
        assert np.all(complete.values == 500.0)
        assert [block.aadt for block in compute_aadt(complete)] == [12000.0, 12000.0]

    def test_reproducible_per_seed(self):
        spec = SyntheticSpec(years=1, seed=11)
        first, _ = generate_synthetic(spec)
        second, _ = generate_synthetic(spec)
        other, _ = generate_synthetic(spec.model_copy(update={"seed": 12}))
        assert first.values.tobytes() == second.values.tobytes()
        assert first.values.tobytes() != other.values.tobytes()

    def test_gappy_agrees_with_truth_where_observed(self):
        gappy, complete = generate_synthetic(SyntheticSpec(years=1, missing_rate=0.1, seed=5))
        assert np.array_equal(gappy.values[gappy.observed], complete.values[gappy.observed])
        assert np.all(complete.values >= 1.0)

    def test_event_spike(self):
        base = SyntheticSpec(years=1, start_year=2015, noise_std=0, missing_rate=0, seed=0)
        spiked = SyntheticSpec.model_validate({**base.model_dump(), "events": "32:2.0:24"})
        _, plain = generate_synthetic(base)
        _, event = generate_synthetic(spiked)
        february_first = slice(31 * 24, 32 * 24)
        np.testing.assert_allclose(event.values[february_first], 2.0 * plain.values[february_first], atol=1.0)
        assert np.array_equal(event.values[: 31 * 24], plain.values[: 31 * 24])

    def test_missing_rate_is_bounded(self):
        with pytest.raises(ValueError):
            SyntheticSpec(missing_rate=0.6)

    def test_presets(self):
        spec = SyntheticSpec.preset(FunctionalClass.URBAN_COLLECTOR, seed=3)
        base_volume, missing_rate = STATION_PRESETS[FunctionalClass.URBAN_COLLECTOR]
        assert spec.missing_rate == missing_rate
        assert spec.base_volume == base_volume
        assert spec.functional_class is FunctionalClass.URBAN_COLLECTOR
        assert spec.seed == 3


class TestDataPaths:
    def test_relative_paths_resolve_inside_the_data_directory(self, tmp_path):
        (tmp_path / "stations").mkdir()
        resolved = resolve_data_path("stations/atr-1.csv", str(tmp_path))
        assert resolved == str((tmp_path / "stations" / "atr-1.csv").resolve())

    def test_absolute_path_inside_is_allowed(self, tmp_path):
        path = tmp_path / "atr-1.csv"
        assert resolve_data_path(str(path), str(tmp_path)) == str(path.resolve())

    @pytest.mark.parametrize("path", ["../secret.txt", "/etc/passwd", "stations/../../secret.txt"])
    def test_paths_outside_are_refused(self, tmp_path, path):
        root = tmp_path / "data"
        root.mkdir()
        with pytest.raises(ForbiddenPathError):
            resolve_data_path(path, str(root))

    def test_symlinks_out_are_refused(self, tmp_path):
        root = tmp_path / "data"
        root.mkdir()
        (tmp_path / "secret.txt").write_text("API_KEY=abc123\n")
        (root / "link.csv").symlink_to(tmp_path / "secret.txt")
        with pytest.raises(ForbiddenPathError):
            resolve_data_path("link.csv", str(root))
