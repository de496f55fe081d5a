import json
from pathlib import Path

import pytest

from app.cli import main
from app.services.ingest.csv_io import parse_csv, write_csv

TINY_CONFIG = "hidden_size=4\nwindow_stride=168\nepochs=1\ntest_hours=8760\nrf_trees=5\nrf_iters=1\n"


def _error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


@pytest.fixture
def station_csv(tmp_path, three_year_station):
    gappy, _ = three_year_station
    path = tmp_path / "atr-7.csv"
    write_csv(gappy, str(path))
    return str(path)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.env"
    path.write_text(TINY_CONFIG)
    return str(path)


class TestSeriesCommands:
    def test_ingest(self, tmp_path, capsys):
        path = tmp_path / "atr-2.csv"
        path.write_text("timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,NaN\n")
        assert main(["ingest", str(path)]) == 0
        out = capsys.readouterr().out
        assert "atr-2" in out
        assert "length    2 h" in out
        assert "missing   1 h (50.00%)" in out

    def test_synth_from_spec_file(self, tmp_path, capsys):
        spec = tmp_path / "spec.env"
        spec.write_text("years=1\nstart_year=2015\nmissing_rate=0.02\nseed=5\n")
        out = tmp_path / "out" / "syn.csv"
        assert main(["synth", str(spec), str(out)]) == 0
        gappy = parse_csv(str(out))
        complete = parse_csv(str(tmp_path / "out" / "syn-complete.csv"))
        assert len(gappy) == len(complete) == 8760
        assert complete.missing_count == 0
        assert 0 < gappy.missing_count
        assert "ground truth" in capsys.readouterr().out

    def test_synth_preset(self, tmp_path):
        spec = tmp_path / "spec.env"
        spec.write_text("years=1\n")
        out, truth = tmp_path / "syn.csv", tmp_path / "truth.csv"
        assert main(["synth", str(spec), str(out), "--preset", "urban-collector", "--truth", str(truth)]) == 0
        assert len(parse_csv(str(truth))) == 8784

    def test_impute_one_method(self, tmp_path, capsys):
        spec = tmp_path / "spec.env"
        spec.write_text("years=1\nstart_year=2015\nmissing_rate=0.05\nseed=1\n")
        gappy, filled = tmp_path / "gappy.csv", tmp_path / "filled.csv"
        main(["synth", str(spec), str(gappy), "--truth", str(tmp_path / "truth.csv")])
        capsys.readouterr()
        code = main(["impute", "--method", "median", str(gappy), str(filled), "--truth", str(tmp_path / "truth.csv")])
        assert code == 0
        out = capsys.readouterr().out
        assert "with Median" in out
        assert "rmse" in out
        assert parse_csv(str(filled)).missing_count == 0

    def test_impute_all_needs_truth(self, station_csv, capsys):
        assert main(["impute", "--method", "all", station_csv]) == 1
        assert _error(capsys)["error"] == "usage_error"

    def test_impute_needs_an_output(self, station_csv, capsys):
        assert main(["impute", "--method", "knn", station_csv]) == 1
        assert _error(capsys)["error"] == "usage_error"


class TestModelCommands:
    def test_train_predict_evaluate(self, tmp_path, station_csv, config_file, three_year_station, capsys):
        model_path = str(tmp_path / "model.json")
        assert main(["train", "--config", config_file, "--cell", "gru", station_csv, model_path]) == 0
        assert "trained Gru-Median horizon 8760 h" in capsys.readouterr().out

        gappy, _ = three_year_station
        inputs, out = tmp_path / "inputs.csv", tmp_path / "predicted.csv"
        write_csv(gappy.slice(0, 48), str(inputs))
        assert main(["predict", model_path, str(inputs), str(out), "--station", "atr-7"]) == 0
        predicted = parse_csv(str(out))
        assert len(predicted) == 48
        assert predicted.start.year == 2016

        capsys.readouterr()
        assert main(["evaluate", model_path, station_csv]) == 0
        out = capsys.readouterr().out
        assert "Gru-Median" in out
        assert " 2017 " in out

    def test_flags_override_the_config_file(self, tmp_path, station_csv, config_file, capsys):
        model_path = str(tmp_path / "model.json")
        assert main(["train", "--config", config_file, "--hidden", "0", station_csv, model_path]) == 1
        assert _error(capsys)["error"] == "usage_error"

    def test_another_stations_csv_is_refused(self, tmp_path, station_csv, config_file, capsys):
        model_path = str(tmp_path / "model.json")
        assert main(["train", "--config", config_file, station_csv, model_path]) == 0
        other = tmp_path / "atr-b.csv"
        other.write_text(Path(station_csv).read_text())
        capsys.readouterr()
        assert main(["predict", model_path, str(other), str(tmp_path / "out.csv")]) == 2
        assert _error(capsys)["error"] == "model_mismatch"
        assert main(["evaluate", model_path, str(other)]) == 2
        assert _error(capsys)["error"] == "model_mismatch"

    def test_tampered_model(self, tmp_path, station_csv, capsys):
        path = tmp_path / "model.json"
        path.write_text("{}")
        assert main(["evaluate", str(path), station_csv]) == 2
        assert _error(capsys)["error"] == "model_mismatch"


class TestExperimentCommands:
    def test_horizons(self, tmp_path, station_csv, config_file, capsys):
        report = tmp_path / "horizons.json"
        args = ["horizons", station_csv, "--config", config_file, "--test-years", "2017", "--jobs", "1"]
        assert main(args + ["--report", str(report)]) == 0
        out = capsys.readouterr().out
        assert "skipped horizon 17520 h" in out
        assert "skipped horizon 26280 h" in out
        assert json.loads(report.read_text())["test_years"] == [2017]

    def test_grid_rejects_years_that_do_not_end_the_series(self, station_csv, config_file, capsys):
        assert main(["grid", station_csv, "--config", config_file, "--test-years", "2015"]) == 1
        assert _error(capsys)["error"] == "usage_error"

    def test_gradcheck(self, capsys):
        assert main(["gradcheck", "--cell", "rnn", "--seeds", "2"]) == 0
        out = capsys.readouterr().out
        assert "SimpleRnn" in out
        assert "PASS" in out


class TestErrors:
    def test_missing_file(self, tmp_path, capsys):
        assert main(["ingest", str(tmp_path / "nope.csv")]) == 2
        assert _error(capsys)["error"] == "file_not_found"

    def test_malformed_file_names_the_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("timestamp,volume\n2008-01-01T00,1\n2008-01-01T05,2\n")
        assert main(["ingest", str(path)]) == 2
        error = _error(capsys)
        assert error["error"] == "malformed_series"
        assert error["line"] == 3

    def test_extra_field_is_a_data_error_on_one_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,130,7\n")
        assert main(["ingest", str(path)]) == 2
        err = capsys.readouterr().err
        assert len(err.strip().splitlines()) == 1
        error = json.loads(err)
        assert (error["error"], error["line"]) == ("malformed_series", 3)

    def test_unexpected_failure_exits_3(self, tmp_path, monkeypatch, capsys):
        def unreadable(*args, **kwargs):
            raise PermissionError(13, "Permission denied")

        monkeypatch.setattr("app.cli.parse_csv", unreadable)
        assert main(["ingest", str(tmp_path / "x.csv")]) == 3
        error = _error(capsys)
        assert error["error"] == "unexpected_error"
        assert error["message"].startswith("PermissionError")

    def test_unknown_command(self, capsys):
        assert main(["fly"]) == 1
        assert _error(capsys)["error"] == "usage_error"

    def test_unknown_class(self, tmp_path, capsys):
        assert main(["ingest", str(tmp_path / "x.csv"), "--class", "motorway"]) == 1
