"""
Series router - API endpoints for validating uploaded series and generating
synthetic stations.
"""

import os
from typing import List, Optional

from fastapi import APIRouter
from pydantic import BaseModel

from app import config
from app.services.ingest.csv_io import parse_csv_text, summarize, write_csv
from app.services.ingest.schemas import SeriesSummary, SyntheticSpec
from app.services.ingest.synthetic import generate_synthetic
from app.services.series.schemas import FunctionalClass

router = APIRouter()


class SeriesUpload(BaseModel):
    csv: str
    station_id: str = "station"
    functional_class: FunctionalClass = FunctionalClass.RURAL_INTERSTATE


class SyntheticRequest(BaseModel):
    spec: SyntheticSpec = SyntheticSpec()
    name: Optional[str] = None


@router.post("/summary", response_model=SeriesSummary)
async def summarize_series(upload: SeriesUpload):
    """
    Validate CSV content and summarize length, span and missing hours.
    """
    series = parse_csv_text(upload.csv, station_id=upload.station_id, functional_class=upload.functional_class)
    return summarize(series)


@router.post("/synthetic", response_model=List[SeriesSummary], status_code=201)
def create_synthetic(request: SyntheticRequest):
    """
    Generate a synthetic station and store the gappy and complete CSVs in the
    data directory.
    """
    name = request.name or request.spec.station_id
    gappy, complete = generate_synthetic(request.spec)
    gappy_path = os.path.join(config.DATA_DIR, f"{name}.csv")
    complete_path = os.path.join(config.DATA_DIR, f"{name}-complete.csv")
    write_csv(gappy, gappy_path)
    write_csv(complete, complete_path)
    return [summarize(gappy, gappy_path), summarize(complete, complete_path)]
