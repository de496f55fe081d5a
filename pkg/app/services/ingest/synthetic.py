"""
Seasonal synthetic traffic generator with gap injection.

Produces a gappy series and its complete ground truth so imputation and
forecast errors can be measured.
"""

import logging
from typing import Tuple

import numpy as np
import pandas as pd

from app.services.ingest.schemas import SyntheticSpec
from app.services.series.core import HOURS_PER_YEAR, hours_in_span
from app.services.series.schemas import HourlySeries

logger = logging.getLogger(__name__)

# Weekday/weekend shape with zero mean over a week
WEEKDAY_PROFILE = np.array([0.4, 0.4, 0.4, 0.4, 0.4, -1.0, -1.0])


def _seasonal_volumes(spec: SyntheticSpec, timestamps: pd.DatetimeIndex, rng: np.random.Generator) -> np.ndarray:
    hours = np.arange(len(timestamps), dtype=np.float64)
    hour_of_day = timestamps.hour.to_numpy()
    day_of_week = timestamps.dayofweek.to_numpy()
    day_of_year = timestamps.dayofyear.to_numpy()

    daily = np.sin(2 * np.pi * (hour_of_day - 6) / 24)
    yearly = np.sin(2 * np.pi * (day_of_year - 80) / 365.25)
    shape = (
        1.0
        + spec.daily_amplitude * daily
        + spec.weekly_amplitude * WEEKDAY_PROFILE[day_of_week]
        + spec.yearly_amplitude * yearly
    )

    events = np.ones(len(timestamps))
    hour_of_year = (day_of_year - 1) * 24 + hour_of_day
    for event in spec.events:
        first = (event.day_of_year - 1) * 24
        active = (hour_of_year >= first) & (hour_of_year < first + event.duration_hours)
        events[active] *= event.multiplier

    growth = (1.0 + spec.growth_rate) ** (hours / HOURS_PER_YEAR)
    noise = np.exp(rng.normal(0.0, spec.noise_std, len(timestamps))) if spec.noise_std > 0 else 1.0
    volumes = spec.base_volume * growth * shape * events * noise
    if spec.round_counts:
        volumes = np.rint(volumes)
    return np.maximum(volumes, 1.0)


def _gap_positions(spec: SyntheticSpec, length: int, rng: np.random.Generator) -> np.ndarray:
    target = int(round(spec.missing_rate * length))
    missing = np.zeros(length, dtype=bool)
    if target == 0:
        return missing
    if spec.gap_model == "mcar":
        missing[rng.choice(length, size=target, replace=False)] = True
        return missing
    count = 0
    while count < target:
        start = int(rng.integers(length))
        burst = int(rng.geometric(1.0 / spec.burst_mean_hours))
        stop = min(length, start + burst)
        fresh = np.flatnonzero(~missing[start:stop]) + start
        fresh = fresh[: target - count]
        missing[fresh] = True
        count += len(fresh)
    return missing


def generate_synthetic(spec: SyntheticSpec) -> Tuple[HourlySeries, HourlySeries]:
    """
    Generate a synthetic station series.

    Args:
        spec: Generator settings

    Returns:
        (series with gaps, complete ground-truth series)
    """
    length = hours_in_span(spec.start_year, spec.start_year + spec.years - 1)
    start = pd.Timestamp(year=spec.start_year, month=1, day=1)
    timestamps = pd.date_range(start, periods=length, freq="h")
    volume_rng, gap_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(2))

    volumes = _seasonal_volumes(spec, timestamps, volume_rng)
    missing = _gap_positions(spec, length, gap_rng)

    complete = HourlySeries.from_values(
        start, volumes, station_id=spec.station_id, functional_class=spec.functional_class
    )
    gappy = complete.with_values(np.where(missing, np.nan, volumes))
    logger.info(
        f"Generated {length} hours for {spec.station_id} "
        f"({100.0 * missing.mean():.2f}% missing, {spec.gap_model})"
    )
    return gappy, complete
