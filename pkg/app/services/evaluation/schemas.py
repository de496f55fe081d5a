"""
Evaluation schemas: per-year AADT blocks, report rows and the evaluation
report.
"""

from typing import List, Optional

from pydantic import BaseModel, Field

from app.services.forecast.schemas import ForecastConfig
from app.services.impute.schemas import Treatment
from app.services.neural.schemas import CellKind
from app.services.series.schemas import FunctionalClass


class YearBlock(BaseModel):
    year: int
    n_days: int
    hourly_sum: float
    aadt: float


class ReportRow(BaseModel):
    """One variant, horizon and forecast year."""

    station: str
    cell: CellKind
    treatment: Treatment
    horizon_hours: int
    year: int
    predicted_aadt: Optional[float] = None
    actual_aadt: Optional[float] = None
    accuracy_pct: Optional[float] = None
    missing_pct: float = 0.0
    hourly_mape: Optional[float] = None
    seed: int = 0
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.error is None and self.accuracy_pct is not None


class SkipRecord(BaseModel):
    horizon_hours: int
    reason: str


class TrendRecord(BaseModel):
    """Hourly trend over the test span; cell/treatment are None for actuals."""

    horizon_hours: int
    cell: Optional[CellKind] = None
    treatment: Optional[Treatment] = None
    start: str
    values: List[Optional[float]]

    @property
    def label(self) -> str:
        if self.cell is None:
            return f"actual-h{self.horizon_hours}"
        return f"{self.cell.value}-{self.treatment.value}-h{self.horizon_hours}"


class BestVariant(BaseModel):
    horizon_hours: int
    year: int
    cell: CellKind
    treatment: Treatment
    accuracy_pct: float


class EvaluationReport(BaseModel):
    station: str
    functional_class: FunctionalClass
    seed: int
    base_config: ForecastConfig
    test_years: List[int]
    missing_pct: float
    rows: List[ReportRow] = Field(default_factory=list)
    skipped: List[SkipRecord] = Field(default_factory=list)
    trends: List[TrendRecord] = Field(default_factory=list)


class SummaryLine(BaseModel):
    group: str
    mean_accuracy_pct: float
    variants: int


class ReportSummary(BaseModel):
    by_cell: List[SummaryLine] = Field(default_factory=list)
    by_treatment: List[SummaryLine] = Field(default_factory=list)
    masking_mean_pct: Optional[float] = None
    imputation_mean_pct: Optional[float] = None
