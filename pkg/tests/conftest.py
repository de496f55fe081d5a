import numpy as np
import pytest

from app.services.forecast.schemas import ForecastConfig
from app.services.impute.schemas import DayMatrix
from app.services.ingest.schemas import SyntheticSpec
from app.services.ingest.synthetic import generate_synthetic


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow end-to-end tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def _day_matrix(cells) -> DayMatrix:
    """DayMatrix straight from a 2-D array with NaN for missing cells."""
    cells = np.array(cells, dtype=np.float64)
    return DayMatrix(
        cells=cells,
        observed_mask=~np.isnan(cells),
        padding=np.zeros(cells.shape, dtype=bool),
        start_offset=0,
        length=cells.size,
    )


@pytest.fixture(scope="session")
def three_year_station():
    """(gappy, complete) synthetic station covering 2015-2017."""
    return generate_synthetic(SyntheticSpec(years=3, start_year=2015, base_volume=400.0, seed=7, station_id="atr-7"))


@pytest.fixture(scope="session")
def gap_free_station():
    gappy, _ = generate_synthetic(
        SyntheticSpec(years=3, start_year=2015, base_volume=400.0, missing_rate=0.0, seed=3, station_id="atr-3")
    )
    return gappy


@pytest.fixture
def tiny_config():
    """One quick epoch on a small network; one test year."""
    return ForecastConfig(
        cell_kind="Lstm",
        treatment="Median",
        horizon_hours=8760,
        test_hours=8760,
        hidden_size=4,
        window_length=168,
        window_stride=168,
        epochs=1,
        batch_size=16,
        rf_trees=5,
        rf_iters=1,
    )


@pytest.fixture
def day_matrix():
    return _day_matrix
