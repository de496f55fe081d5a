"""
Reports router - API endpoints for running the model grid and the
multi-year horizon experiment.
"""

from typing import List, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from app import config
from app.services.evaluation.grid import HORIZONS, best_variants, run_grid, run_multi_horizon, summarize_report
from app.services.evaluation.schemas import BestVariant, EvaluationReport, ReportSummary
from app.services.evaluation.storage import ReportFileStorage
from app.services.forecast.schemas import ForecastConfig
from app.services.ingest.csv_io import parse_csv, resolve_data_path

router = APIRouter()


def get_storage() -> ReportFileStorage:
    return ReportFileStorage(directory=config.REPORTS_DIR)


class GridRequest(BaseModel):
    csv_path: str = Field(..., description="CSV path inside the data directory")
    test_years: List[int]
    config: ForecastConfig = ForecastConfig()
    horizon_years: Optional[List[int]] = Field(None, description="Run the horizon experiment instead of the grid")
    jobs: int = Field(1, ge=1)


class GridResponse(BaseModel):
    id: str
    summary: ReportSummary
    best: List[BestVariant]


@router.post("/grid", response_model=GridResponse, status_code=201)
def create_grid_report(request: GridRequest):
    """
    Run the grid (or the horizon experiment) and store the report.
    """
    series = parse_csv(resolve_data_path(request.csv_path, config.DATA_DIR))
    if request.horizon_years:
        horizons = [HORIZONS[0] * years for years in request.horizon_years]
        report = run_multi_horizon(series, request.config, request.test_years, horizons, n_jobs=request.jobs)
    else:
        report = run_grid(series, request.config, request.test_years, n_jobs=request.jobs)
    report_id = get_storage().save_report(report)
    return GridResponse(id=report_id, summary=summarize_report(report), best=best_variants(report))


@router.get("/{report_id}", response_model=EvaluationReport)
async def get_report(report_id: str):
    """
    Get a stored report by ID.
    """
    report = get_storage().get_report(report_id)
    if not report:
        raise HTTPException(status_code=404, detail="Report not found")
    return report
