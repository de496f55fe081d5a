"""
Series schemas: the hourly volume series, the shifted prediction dataset and
the normalization parameters.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from app.errors import DegenerateNormalizerError, MalformedSeriesError, ZeroVolumeError

HOUR = pd.Timedelta(hours=1)


class FunctionalClass(str, Enum):
    RURAL_INTERSTATE = "RuralInterstate"
    URBAN_INTERSTATE = "UrbanInterstate"
    RURAL_ARTERIAL = "RuralArterial"
    URBAN_ARTERIAL = "UrbanArterial"
    RURAL_COLLECTOR = "RuralCollector"
    URBAN_COLLECTOR = "UrbanCollector"
    LOCAL = "Local"


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HourlySeries:
    """
    Contiguous hourly volume series.

    Missing hours keep their position: `values` holds NaN there and
    `observed` is False.
    """

    start: pd.Timestamp
    values: np.ndarray
    observed: np.ndarray
    station_id: str = "station"
    functional_class: FunctionalClass = FunctionalClass.RURAL_INTERSTATE

    def __post_init__(self):
        if len(self.values) < 1:
            raise MalformedSeriesError("A series needs at least one hour")
        if len(self.values) != len(self.observed):
            raise MalformedSeriesError("Values and observed flags differ in length")
        present = self.values[self.observed]
        if not np.all(np.isfinite(present)) or np.any(present < 0):
            raise MalformedSeriesError("Present volumes must be finite and non-negative")
        if self.start != self.start.floor("h"):
            raise MalformedSeriesError(f"Series start {self.start} is not on the hour")

    @classmethod
    def from_values(
        cls,
        start,
        values: Sequence[Optional[float]],
        station_id: str = "station",
        functional_class: FunctionalClass = FunctionalClass.RURAL_INTERSTATE,
    ) -> "HourlySeries":
        """
        Build a series from a sequence where None or NaN marks a missing hour.
        """
        raw = np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
        observed = ~np.isnan(raw)
        clean = np.where(observed, raw, np.nan)
        return cls(
            start=pd.Timestamp(start),
            values=_frozen(clean),
            observed=_frozen(observed),
            station_id=station_id,
            functional_class=FunctionalClass(functional_class),
        )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> pd.Timestamp:
        """Timestamp of the last hour."""
        return self.start + (len(self) - 1) * HOUR

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, periods=len(self), freq="h")

    @property
    def missing_count(self) -> int:
        return int((~self.observed).sum())

    @property
    def missing_fraction(self) -> float:
        return self.missing_count / len(self)

    def reject_zero_volumes(self, first_line: int = 0):
        """
        Ingestion rule: a present volume of exactly 0 is not allowed.

        `first_line` numbers the first hour in the error (the CSV line of the
        first data row); the default reports hour indices.
        """
        zeros = np.flatnonzero(self.observed & (self.values == 0))
        if len(zeros):
            raise ZeroVolumeError("Zero volume; missing hours must be NaN", line=int(zeros[0]) + first_line)

    def slice(self, start: int, stop: int) -> "HourlySeries":
        """Sub-series of positions [start, stop)."""
        return HourlySeries(
            start=self.start + start * HOUR,
            values=_frozen(self.values[start:stop].copy()),
            observed=_frozen(self.observed[start:stop].copy()),
            station_id=self.station_id,
            functional_class=self.functional_class,
        )

    def with_values(self, values: np.ndarray, start=None) -> "HourlySeries":
        """Same station, new values; NaN marks missing."""
        values = np.asarray(values, dtype=np.float64).copy()
        return HourlySeries(
            start=self.start if start is None else pd.Timestamp(start),
            values=_frozen(values),
            observed=_frozen(~np.isnan(values)),
            station_id=self.station_id,
            functional_class=self.functional_class,
        )


@dataclass(frozen=True)
class PredictionDataset:
    """
    Input/target pairing produced by the forward shift.

    `start` is the timestamp of input position 0; target i belongs to
    `start + i + horizon_hours`.
    """

    inputs: np.ndarray
    targets: np.ndarray
    input_mask: np.ndarray
    target_mask: np.ndarray
    horizon_hours: int
    start: pd.Timestamp = field(default_factory=lambda: pd.Timestamp(0))

    def __post_init__(self):
        lengths = {len(self.inputs), len(self.targets), len(self.input_mask), len(self.target_mask)}
        if len(lengths) != 1:
            raise MalformedSeriesError("Dataset streams must share one length")

    def __len__(self) -> int:
        return len(self.inputs)

    def slice(self, start: int, stop: int) -> "PredictionDataset":
        return PredictionDataset(
            inputs=_frozen(self.inputs[start:stop].copy()),
            targets=_frozen(self.targets[start:stop].copy()),
            input_mask=_frozen(self.input_mask[start:stop].copy()),
            target_mask=_frozen(self.target_mask[start:stop].copy()),
            horizon_hours=self.horizon_hours,
            start=self.start + start * HOUR,
        )

    def replace(self, **changes) -> "PredictionDataset":
        fields = {
            "inputs": self.inputs,
            "targets": self.targets,
            "input_mask": self.input_mask,
            "target_mask": self.target_mask,
            "horizon_hours": self.horizon_hours,
            "start": self.start,
        }
        fields.update(changes)
        for name in ("inputs", "targets", "input_mask", "target_mask"):
            fields[name] = _frozen(np.array(fields[name], copy=True))
        return PredictionDataset(**fields)


class NormalizationParams(BaseModel):
    """Parameters of the log + min-max scaling, fitted on training data."""

    model_config = ConfigDict(frozen=True)

    log_applied: bool = True
    x_min: float
    x_max: float

    @model_validator(mode="after")
    def check_range(self):
        if not self.x_max > self.x_min:
            raise DegenerateNormalizerError("Normalizer range is empty (x_max <= x_min)")
        return self
