"""
Trained model file storage.
One JSON document per model; the CLI also reads and writes single model files.
"""

import os
import json
import uuid
import logging
from typing import List, Optional
from datetime import datetime

from pydantic import ValidationError

from app.errors import ModelMismatchError
from app.services.forecast.schemas import ModelRecord, ModelSummary, TrainedModel

logger = logging.getLogger(__name__)


def save_model(model: TrainedModel, path: str, **extra) -> ModelRecord:
    """Write a model record to `path`."""
    record = ModelRecord.from_model(model, **extra)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        f.write(record.model_dump_json())
    return record


def read_record(path: str) -> ModelRecord:
    with open(path, "r") as f:
        return ModelRecord.model_validate_json(f.read())


def load_model(path: str) -> TrainedModel:
    """
    Read a model file and verify its fingerprint.

    Args:
        path: Path to a model JSON file

    Returns:
        The trained model
    """
    try:
        record = read_record(path)
    except (ValidationError, json.JSONDecodeError) as e:
        raise ModelMismatchError(f"Unreadable model file {path}: {e}")
    model = record.to_model()
    if model.fingerprint != record.fingerprint:
        raise ModelMismatchError(f"Model file {path} does not match its fingerprint")
    return model


class ModelFileStorage:
    """
    File storage handler for trained models.
    """

    def __init__(self, directory: str = "data/models"):
        """
        Initialize the storage in the given directory.

        Args:
            directory: Directory holding one JSON file per model
        """
        self.directory = directory
        self.initialize_directory()

    def initialize_directory(self):
        """Create the model directory if it doesn't exist."""
        os.makedirs(self.directory, exist_ok=True)

    def _path(self, model_id: str) -> str:
        return os.path.join(self.directory, f"{model_id}.json")

    def save_model(self, model: TrainedModel) -> ModelRecord:
        """
        Store a trained model.

        Args:
            model: The model to store

        Returns:
            The stored record with its new id
        """
        model_id = uuid.uuid4().hex
        record = save_model(
            model, self._path(model_id), id=model_id, created_at=datetime.utcnow().isoformat()
        )
        logger.info(f"Stored model {model_id} ({model.config.label})")
        return record

    def get_model(self, model_id: str) -> Optional[TrainedModel]:
        """
        Get a stored model by ID.

        Args:
            model_id: ID of the model to load

        Returns:
            The model if found, None otherwise
        """
        path = self._path(model_id)
        if not os.path.exists(path):
            return None
        return load_model(path)

    def get_summary(self, model_id: str) -> Optional[ModelSummary]:
        path = self._path(model_id)
        if not os.path.exists(path):
            return None
        return self._summary(read_record(path))

    def list_models(self) -> List[ModelSummary]:
        """Summaries of every readable model, oldest first."""
        summaries = []
        for name in sorted(os.listdir(self.directory)):
            if not name.endswith(".json"):
                continue
            try:
                summaries.append(self._summary(read_record(os.path.join(self.directory, name))))
            except (ValidationError, json.JSONDecodeError, OSError) as e:
                logger.error(f"Error loading model file {name}: {e}")
        summaries.sort(key=lambda summary: summary.created_at)
        return summaries

    def delete_model(self, model_id: str) -> bool:
        """
        Delete a stored model.

        Args:
            model_id: ID of the model to delete

        Returns:
            True if the model existed, False otherwise
        """
        path = self._path(model_id)
        if not os.path.exists(path):
            return False
        os.remove(path)
        return True

    @staticmethod
    def _summary(record: ModelRecord) -> ModelSummary:
        trace = record.training_loss_trace
        return ModelSummary(
            id=record.id or "",
            created_at=record.created_at or "",
            station_id=record.station_id,
            label=record.config.label,
            config=record.config,
            final_loss=trace[-1] if trace else None,
        )
