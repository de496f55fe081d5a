"""
CSV ingestion and export of hourly series.

Format: header `timestamp,volume`; ISO-8601 hour timestamps, strictly
consecutive; volume is a count, `NaN` (any case) or empty for a missing hour.
"""

import io
import logging
import os
import re
from typing import Optional

import numpy as np
import pandas as pd

from app.errors import ForbiddenPathError, MalformedSeriesError
from app.services.ingest.schemas import SeriesSummary
from app.services.series.core import missing_by_year
from app.services.series.schemas import FunctionalClass, HourlySeries

logger = logging.getLogger(__name__)

TIMESTAMP_FORMAT = "%Y-%m-%dT%H"
COLUMNS = ["timestamp", "volume"]
# Data rows start on line 2 of the file
FIRST_DATA_LINE = 2


def parse_csv(
    path: str,
    station_id: Optional[str] = None,
    functional_class: FunctionalClass = FunctionalClass.RURAL_INTERSTATE,
) -> HourlySeries:
    """
    Read an hourly series from a CSV file.

    Args:
        path: CSV file path
        station_id: Station label; defaults to the file name without extension
        functional_class: Roadway class of the station

    Returns:
        The parsed series with missing hours marked
    """
    if station_id is None:
        station_id = os.path.splitext(os.path.basename(path))[0]
    with open(path, "r") as f:
        return parse_csv_text(f.read(), station_id=station_id, functional_class=functional_class)


def _parser_error_line(error: pd.errors.ParserError) -> Optional[int]:
    # pandas reports "Expected 2 fields in line 3, saw 3"; lines count the header
    match = re.search(r"line (\d+)", str(error))
    return int(match.group(1)) if match else None


def resolve_data_path(path: str, root: str) -> str:
    """
    Resolve a client-supplied CSV path inside the data directory.

    Relative paths are taken from `root`; anything that resolves outside it
    after symlinks and `..` are followed is refused.
    """
    base = os.path.realpath(root)
    resolved = os.path.realpath(os.path.join(base, path))
    if os.path.commonpath([base, resolved]) != base:
        raise ForbiddenPathError("CSV path must point inside the data directory")
    return resolved


def parse_csv_text(
    text: str,
    station_id: str = "station",
    functional_class: FunctionalClass = FunctionalClass.RURAL_INTERSTATE,
) -> HourlySeries:
    """Parse CSV content already in memory."""
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise MalformedSeriesError("Empty file", line=1)
    except pd.errors.ParserError as e:
        raise MalformedSeriesError("Row does not have exactly two fields", line=_parser_error_line(e))
    if [column.strip().lower() for column in frame.columns] != COLUMNS:
        raise MalformedSeriesError("Expected header 'timestamp,volume'", line=1)
    frame.columns = COLUMNS
    if frame.empty:
        raise MalformedSeriesError("No data rows", line=FIRST_DATA_LINE)

    timestamps = pd.to_datetime(frame["timestamp"].str.strip(), format="ISO8601", errors="coerce")
    bad = np.flatnonzero(timestamps.isna().to_numpy())
    if len(bad):
        row = int(bad[0])
        raise MalformedSeriesError(
            f"Unreadable timestamp '{frame['timestamp'].iloc[row]}'", line=row + FIRST_DATA_LINE
        )
    if timestamps.dt.tz is not None:
        timestamps = timestamps.dt.tz_convert("UTC").dt.tz_localize(None)
    steps = timestamps.diff().iloc[1:].to_numpy()
    broken = np.flatnonzero(steps != np.timedelta64(1, "h"))
    if len(broken):
        row = int(broken[0]) + 1
        raise MalformedSeriesError(
            f"Timestamp {frame['timestamp'].iloc[row]} does not follow the previous hour",
            line=row + FIRST_DATA_LINE,
        )

    raw = frame["volume"].str.strip()
    missing = (raw == "") | (raw.str.lower() == "nan")
    numbers = pd.to_numeric(raw.where(~missing), errors="coerce")
    unreadable = np.flatnonzero((numbers.isna() & ~missing).to_numpy())
    if len(unreadable):
        row = int(unreadable[0])
        raise MalformedSeriesError(f"Unreadable volume '{raw.iloc[row]}'", line=row + FIRST_DATA_LINE)
    values = numbers.to_numpy(dtype=np.float64)
    negative = np.flatnonzero(values < 0)
    if len(negative):
        raise MalformedSeriesError("Negative volume", line=int(negative[0]) + FIRST_DATA_LINE)
    series = HourlySeries.from_values(
        timestamps.iloc[0], values, station_id=station_id, functional_class=functional_class
    )
    series.reject_zero_volumes(first_line=FIRST_DATA_LINE)
    logger.info(f"Parsed {len(series)} hours for station {station_id} ({series.missing_count} missing)")
    return series


def _format_volume(value: float) -> str:
    if np.isnan(value):
        return "NaN"
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def format_csv(series: HourlySeries) -> str:
    """Render a series in the CSV format `parse_csv` reads."""
    frame = pd.DataFrame(
        {
            "timestamp": series.timestamps.strftime(TIMESTAMP_FORMAT),
            "volume": [_format_volume(value) for value in series.values],
        }
    )
    return frame.to_csv(index=False, lineterminator="\n")


def write_csv(series: HourlySeries, path: str):
    """Write a series to disk, creating the parent directory if needed."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        f.write(format_csv(series))
    logger.info(f"Wrote {len(series)} hours to {path}")


def summarize(series: HourlySeries, path: Optional[str] = None) -> SeriesSummary:
    """Length, span and missing percentages of a series."""
    return SeriesSummary(
        station_id=series.station_id,
        functional_class=series.functional_class,
        start=series.start.strftime(TIMESTAMP_FORMAT),
        end=series.end.strftime(TIMESTAMP_FORMAT),
        length=len(series),
        missing_count=series.missing_count,
        missing_pct=100.0 * series.missing_fraction,
        missing_pct_by_year=missing_by_year(series),
        path=path,
    )
