"""
Models router - API endpoints for training, listing and querying forecast
models.
"""

from typing import List, Optional

from fastapi import APIRouter, HTTPException, Path
from pydantic import BaseModel, Field

from app import config
from app.services.forecast.pipeline import predict, train
from app.services.forecast.schemas import ForecastConfig, ModelSummary, PredictionPoint
from app.services.forecast.storage import ModelFileStorage
from app.services.ingest.csv_io import TIMESTAMP_FORMAT, parse_csv, resolve_data_path

router = APIRouter()


def get_storage() -> ModelFileStorage:
    return ModelFileStorage(directory=config.MODELS_DIR)


class TrainRequest(BaseModel):
    csv_path: str = Field(..., description="CSV path inside the data directory")
    config: ForecastConfig = ForecastConfig()


class PredictRequest(BaseModel):
    csv_path: str = Field(..., description="CSV path inside the data directory")
    station_id: Optional[str] = Field(None, description="Station of the CSV; defaults to its file name")


@router.get("/", response_model=List[ModelSummary])
async def get_models():
    """
    List stored models.
    """
    return get_storage().list_models()


@router.post("/", response_model=ModelSummary, status_code=201)
def create_model(request: TrainRequest):
    """
    Train a model on a stored CSV and keep it.
    """
    series = parse_csv(resolve_data_path(request.csv_path, config.DATA_DIR))
    model = train(series, request.config)
    storage = get_storage()
    record = storage.save_model(model)
    return storage.get_summary(record.id)


@router.get("/{model_id}", response_model=ModelSummary)
async def get_model(model_id: str = Path(..., description="The ID of the model to retrieve")):
    """
    Get a stored model's summary by ID.
    """
    summary = get_storage().get_summary(model_id)
    if not summary:
        raise HTTPException(status_code=404, detail="Model not found")
    return summary


@router.delete("/{model_id}", status_code=204)
async def delete_model(model_id: str):
    """
    Delete a stored model.
    """
    if not get_storage().delete_model(model_id):
        raise HTTPException(status_code=404, detail="Model not found")


@router.post("/{model_id}/predict", response_model=List[PredictionPoint])
def predict_volumes(model_id: str, request: PredictRequest):
    """
    Predict hourly volumes one horizon after every hour of a CSV.
    """
    model = get_storage().get_model(model_id)
    if not model:
        raise HTTPException(status_code=404, detail="Model not found")
    series = parse_csv(resolve_data_path(request.csv_path, config.DATA_DIR), station_id=request.station_id)
    predicted = predict(model, series)
    stamps = predicted.timestamps.strftime(TIMESTAMP_FORMAT)
    return [PredictionPoint(timestamp=stamp, volume=value) for stamp, value in zip(stamps, predicted.values)]
