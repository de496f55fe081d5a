"""
Ingest schemas: synthetic data settings, station presets and series
summaries.
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from app.services.series.schemas import FunctionalClass


class EventSpike(BaseModel):
    day_of_year: int = Field(..., ge=1, le=366)
    multiplier: float = Field(..., gt=0)
    duration_hours: int = Field(..., ge=1)


class SyntheticSpec(BaseModel):
    """Seasonal hourly volume generator settings."""

    years: int = Field(5, ge=1)
    start_year: int = 2008
    base_volume: float = Field(500.0, gt=0)
    daily_amplitude: float = Field(0.6, ge=0)
    weekly_amplitude: float = Field(0.05, ge=0)
    yearly_amplitude: float = Field(0.1, ge=0)
    growth_rate: float = 0.02
    noise_std: float = Field(0.05, ge=0)
    events: List[EventSpike] = Field(default_factory=list)
    missing_rate: float = Field(0.03, ge=0, le=0.5)
    gap_model: Literal["mcar", "burst"] = "mcar"
    burst_mean_hours: float = Field(6.0, gt=0)
    round_counts: bool = True
    seed: int = 0
    station_id: str = "synthetic"
    functional_class: FunctionalClass = FunctionalClass.RURAL_INTERSTATE

    @field_validator("events", mode="before")
    @classmethod
    def parse_events(cls, value):
        # Config files carry events as "day:multiplier:hours;day:multiplier:hours"
        if isinstance(value, str):
            events = []
            for chunk in filter(None, (part.strip() for part in value.split(";"))):
                day, multiplier, hours = chunk.split(":")
                events.append(
                    {"day_of_year": int(day), "multiplier": float(multiplier), "duration_hours": int(hours)}
                )
            return events
        return value

    @classmethod
    def preset(cls, functional_class: FunctionalClass, **overrides) -> "SyntheticSpec":
        """Spec with the base volume and missing rate typical of a functional class."""
        base_volume, missing_rate = STATION_PRESETS[FunctionalClass(functional_class)]
        fields = {
            "base_volume": base_volume,
            "missing_rate": missing_rate,
            "functional_class": FunctionalClass(functional_class),
            "station_id": f"synthetic-{FunctionalClass(functional_class).value}",
        }
        fields.update(overrides)
        return cls(**fields)


# (base vehicles/hour, missing fraction) per class; missing fractions are the
# ones observed at the permanent count stations of each class.
STATION_PRESETS: Dict[FunctionalClass, tuple] = {
    FunctionalClass.RURAL_INTERSTATE: (1800.0, 0.022),
    FunctionalClass.URBAN_INTERSTATE: (4200.0, 0.029),
    FunctionalClass.RURAL_ARTERIAL: (450.0, 0.013),
    FunctionalClass.URBAN_ARTERIAL: (1500.0, 0.049),
    FunctionalClass.RURAL_COLLECTOR: (150.0, 0.021),
    FunctionalClass.URBAN_COLLECTOR: (400.0, 0.067),
    FunctionalClass.LOCAL: (60.0, 0.05),
}


class SeriesSummary(BaseModel):
    station_id: str
    functional_class: FunctionalClass
    start: str
    end: str
    length: int
    missing_count: int
    missing_pct: float
    missing_pct_by_year: Dict[int, float] = Field(default_factory=dict)
    path: Optional[str] = None
