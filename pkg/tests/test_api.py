import pytest
from fastapi.testclient import TestClient

from app import config
from app.main import app
from app.services.ingest.csv_io import write_csv


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "DATA_DIR", str(tmp_path / "data"))
    monkeypatch.setattr(config, "MODELS_DIR", str(tmp_path / "models"))
    monkeypatch.setattr(config, "REPORTS_DIR", str(tmp_path / "reports"))
    return TestClient(app)


@pytest.fixture
def station_csv(tmp_path, three_year_station):
    gappy, _ = three_year_station
    path = tmp_path / "data" / "atr-7.csv"
    write_csv(gappy, str(path))
    return str(path)


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


class TestSeriesApi:
    def test_summary(self, client):
        upload = {"csv": "timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,NaN\n", "station_id": "atr-2"}
        response = client.post("/api/series/summary", json=upload)
        assert response.status_code == 200
        body = response.json()
        assert (body["station_id"], body["length"], body["missing_pct"]) == ("atr-2", 2, 50.0)

    def test_extra_field_names_the_line(self, client):
        upload = {"csv": "timestamp,volume\n2008-01-01T00,120\n2008-01-01T01,130,7\n"}
        response = client.post("/api/series/summary", json=upload)
        assert response.status_code == 422
        assert (response.json()["error"], response.json()["line"]) == ("malformed_series", 3)

    def test_zero_volume_is_rejected(self, client):
        response = client.post("/api/series/summary", json={"csv": "timestamp,volume\n2008-01-01T00,0\n"})
        assert response.status_code == 422
        assert response.json()["error"] == "zero_volume"

    def test_synthetic_station_is_stored(self, client, tmp_path):
        request = {"spec": {"years": 1, "start_year": 2015, "missing_rate": 0.05, "seed": 2}, "name": "syn"}
        response = client.post("/api/series/synthetic", json=request)
        assert response.status_code == 201
        gappy, complete = response.json()
        assert gappy["length"] == complete["length"] == 8760
        assert complete["missing_count"] == 0
        assert gappy["missing_count"] > 0
        assert (tmp_path / "data" / "syn.csv").exists()
        assert (tmp_path / "data" / "syn-complete.csv").exists()


class TestModelsApi:
    def test_train_list_predict_delete(self, client, station_csv, tmp_path, three_year_station, tiny_config):
        request = {"csv_path": station_csv, "config": tiny_config.model_dump(mode="json")}
        response = client.post("/api/models/", json=request)
        assert response.status_code == 201
        summary = response.json()
        assert summary["station_id"] == "atr-7"
        assert summary["label"] == "Lstm-Median"
        model_id = summary["id"]

        assert [item["id"] for item in client.get("/api/models/").json()] == [model_id]
        assert client.get(f"/api/models/{model_id}").json()["config"]["hidden_size"] == 4

        gappy, _ = three_year_station
        write_csv(gappy.slice(0, 48), str(tmp_path / "data" / "inputs.csv"))
        request = {"csv_path": "inputs.csv", "station_id": "atr-7"}
        response = client.post(f"/api/models/{model_id}/predict", json=request)
        assert response.status_code == 200
        points = response.json()
        assert len(points) == 48
        assert points[0]["timestamp"] == "2016-01-01T00"
        assert all(point["volume"] >= 0 for point in points)

        response = client.post(f"/api/models/{model_id}/predict", json={"csv_path": "inputs.csv"})
        assert response.status_code == 422
        assert response.json()["error"] == "model_mismatch"

        assert client.delete(f"/api/models/{model_id}").status_code == 204
        assert client.get(f"/api/models/{model_id}").status_code == 404
        assert client.delete(f"/api/models/{model_id}").status_code == 404

    @pytest.mark.parametrize("path", ["../secret.txt", "{secret}"])
    def test_csv_paths_outside_the_data_directory_are_refused(self, client, tmp_path, path):
        secret = tmp_path / "secret.txt"
        secret.write_text("API_KEY=abc123\n")
        response = client.post("/api/models/", json={"csv_path": path.format(secret=secret)})
        assert response.status_code == 403
        assert response.json()["error"] == "forbidden_path"
        assert "abc123" not in response.text

    def test_missing_csv(self, client):
        response = client.post("/api/models/", json={"csv_path": "nope.csv"})
        assert response.status_code == 404
        assert response.json()["error"] == "file_not_found"

    def test_unknown_model(self, client):
        assert client.get("/api/models/nope").status_code == 404
        assert client.post("/api/models/nope/predict", json={"csv_path": "x.csv"}).status_code == 404

    def test_bad_window_is_a_data_error(self, client, station_csv, tiny_config):
        settings = tiny_config.model_copy(update={"window_length": 100_000}).model_dump(mode="json")
        response = client.post("/api/models/", json={"csv_path": station_csv, "config": settings})
        assert response.status_code == 422
        assert response.json()["error"] == "invalid_window"


class TestReportsApi:
    def test_horizon_report(self, client, station_csv, tiny_config):
        request = {
            "csv_path": station_csv,
            "test_years": [2017],
            "config": tiny_config.model_dump(mode="json"),
            "horizon_years": [1, 2, 3],
        }
        response = client.post("/api/reports/grid", json=request)
        assert response.status_code == 201
        body = response.json()
        assert [best["horizon_hours"] for best in body["best"]] == [8760]
        assert body["summary"]["masking_mean_pct"] is None

        report = client.get(f"/api/reports/{body['id']}").json()
        assert report["station"] == "atr-7"
        assert [skip["horizon_hours"] for skip in report["skipped"]] == [17520, 26280]
        assert len(report["rows"]) == 1

    def test_test_years_must_end_the_series(self, client, station_csv, tiny_config):
        request = {"csv_path": station_csv, "test_years": [2015], "config": tiny_config.model_dump(mode="json")}
        response = client.post("/api/reports/grid", json=request)
        assert response.status_code == 400
        assert response.json()["error"] == "usage_error"

    def test_unknown_report(self, client):
        assert client.get("/api/reports/nope").status_code == 404
