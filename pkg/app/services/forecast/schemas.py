"""
Forecast schemas: pipeline configuration, the trained model and its stored
record.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.services.impute.registry import SeriesImputer
from app.services.impute.schemas import Treatment
from app.services.neural.schemas import CellKind, ModelParams, ParamsRecord
from app.services.series.schemas import FunctionalClass, NormalizationParams

MODEL_FORMAT_VERSION = 1


class ForecastConfig(BaseModel):
    """One (cell kind, treatment) variant and its training settings."""

    model_config = ConfigDict(frozen=True)

    cell_kind: CellKind = CellKind.LSTM
    treatment: Treatment = Treatment.MEDIAN
    horizon_hours: int = Field(8760, ge=1)
    test_hours: int = Field(17544, ge=1)
    hidden_size: int = Field(64, ge=1)
    window_length: int = Field(168, ge=1)
    window_stride: int = Field(24, ge=1)
    epochs: int = Field(20, ge=1)
    batch_size: int = Field(32, ge=1)
    learning_rate: float = Field(0.001, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    seed: int = 0
    knn_k: int = Field(5, ge=1)
    rf_trees: int = Field(50, ge=1)
    rf_iters: int = Field(5, ge=1)

    @field_validator("cell_kind", mode="before")
    @classmethod
    def parse_cell_kind(cls, value):
        return CellKind.parse(value) if isinstance(value, str) else value

    @field_validator("treatment", mode="before")
    @classmethod
    def parse_treatment(cls, value):
        return Treatment.parse(value) if isinstance(value, str) else value

    @property
    def label(self) -> str:
        return f"{self.cell_kind.value}-{self.treatment.value}"


@dataclass(frozen=True)
class TrainedModel:
    """
    Everything `predict` needs: weights, normalizer, config and the
    training inputs in log space (to re-fit the treatment).
    """

    params: ModelParams
    normalizer: NormalizationParams
    config: ForecastConfig
    training_loss_trace: List[float]
    station_id: str
    functional_class: FunctionalClass
    reference_inputs: np.ndarray
    reference_start_hour: int
    skipped_batches: int = 0
    imputer: Optional[SeriesImputer] = field(default=None, compare=False, repr=False)

    def fitted_imputer(self) -> Optional[SeriesImputer]:
        """The treatment fitted on the training inputs (None for masking)."""
        if not self.config.treatment.is_imputation:
            return None
        if self.imputer is None:
            imputer = SeriesImputer(
                self.config.treatment,
                seed=self.config.seed,
                rf_trees=self.config.rf_trees,
                rf_iters=self.config.rf_iters,
                knn_k=self.config.knn_k,
            ).fit(self.reference_inputs, self.reference_start_hour)
            object.__setattr__(self, "imputer", imputer)
        return self.imputer

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.station_id.encode())
        digest.update(self.normalizer.model_dump_json().encode())
        for name in sorted(self.params.weights):
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(self.params.weights[name]).tobytes())
        return digest.hexdigest()


class ModelRecord(BaseModel):
    """Versioned, lossless JSON form of a TrainedModel."""

    format_version: int = MODEL_FORMAT_VERSION
    id: Optional[str] = None
    created_at: Optional[str] = None
    station_id: str
    functional_class: FunctionalClass
    config: ForecastConfig
    normalizer: NormalizationParams
    params: ParamsRecord
    training_loss_trace: List[float]
    skipped_batches: int = 0
    reference_start_hour: int
    reference_inputs: List[Optional[float]]
    fingerprint: str

    @classmethod
    def from_model(cls, model: TrainedModel, **extra: Any) -> "ModelRecord":
        return cls(
            station_id=model.station_id,
            functional_class=model.functional_class,
            config=model.config,
            normalizer=model.normalizer,
            params=ParamsRecord.from_params(model.params),
            training_loss_trace=list(model.training_loss_trace),
            skipped_batches=model.skipped_batches,
            reference_start_hour=model.reference_start_hour,
            reference_inputs=[None if np.isnan(v) else float(v) for v in model.reference_inputs],
            fingerprint=model.fingerprint,
            **extra,
        )

    def to_model(self) -> TrainedModel:
        return TrainedModel(
            params=self.params.to_params(),
            normalizer=self.normalizer,
            config=self.config,
            training_loss_trace=list(self.training_loss_trace),
            station_id=self.station_id,
            functional_class=self.functional_class,
            reference_inputs=np.array(
                [np.nan if v is None else v for v in self.reference_inputs], dtype=np.float64
            ),
            reference_start_hour=self.reference_start_hour,
            skipped_batches=self.skipped_batches,
        )


class ModelSummary(BaseModel):
    id: str
    created_at: str
    station_id: str
    label: str
    config: ForecastConfig
    final_loss: Optional[float] = None


class PredictionPoint(BaseModel):
    timestamp: str
    volume: float
