"""
Forecast pipeline: shift, split, treat, normalize, window, train and
predict one year (or more) ahead.
"""

import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

from app.errors import EmptyLossError, InvalidWindowError, ModelMismatchError
from app.services.forecast.schemas import ForecastConfig, TrainedModel
from app.services.impute.masking import apply_masking
from app.services.impute.registry import SeriesImputer
from app.services.neural.adam import adam_step, init_adam
from app.services.neural.cells import init_params
from app.services.neural.network import backward, forward
from app.services.series.core import fit_normalizer, inverse_transform, shift_pair, split_train_test, transform
from app.services.series.schemas import HOUR, HourlySeries, NormalizationParams, PredictionDataset

logger = logging.getLogger(__name__)

# Largest log volume inverse_transform is asked to undo (expm1 overflows near 709)
MAX_LOG_VOLUME = 700.0


class Windows(NamedTuple):
    """Stacked training windows, one row per window."""

    inputs: np.ndarray
    targets: np.ndarray
    input_mask: np.ndarray
    target_mask: np.ndarray
    starts: np.ndarray

    def __len__(self) -> int:
        return len(self.starts)


def make_windows(dataset: PredictionDataset, window_length: int, stride: int) -> Windows:
    """
    Cut a dataset into windows starting at 0, stride, 2 * stride, ...;
    a final partial window is dropped.
    """
    if window_length < 1 or stride < 1:
        raise InvalidWindowError("Window length and stride must be positive")
    if window_length > len(dataset):
        raise InvalidWindowError(f"Window of {window_length} h exceeds the dataset ({len(dataset)} h)")
    starts = np.arange(0, len(dataset) - window_length + 1, stride)
    index = starts[:, None] + np.arange(window_length)[None, :]
    return Windows(
        inputs=dataset.inputs[index],
        targets=dataset.targets[index],
        input_mask=dataset.input_mask[index],
        target_mask=dataset.target_mask[index],
        starts=starts,
    )


def _make_imputer(config: ForecastConfig) -> SeriesImputer:
    return SeriesImputer(
        config.treatment,
        seed=config.seed,
        rf_trees=config.rf_trees,
        rf_iters=config.rf_iters,
        knn_k=config.knn_k,
    )


def _treated_inputs(raw: np.ndarray, start_hour: int, imputer: Optional[SeriesImputer], fit: bool) -> np.ndarray:
    """Raw inputs with gaps imputed in log space; NaN stays where masking applies."""
    if imputer is None:
        return raw
    logged = np.log1p(raw)
    result = imputer.fit_transform(logged, start_hour) if fit else imputer.transform(logged, start_hour)
    return np.where(np.isnan(raw), np.maximum(np.expm1(result.filled), 0.0), raw)


def _normalized(dataset: PredictionDataset, inputs: np.ndarray, normalizer: NormalizationParams) -> PredictionDataset:
    present = ~np.isnan(inputs)
    scaled_inputs = np.full(len(inputs), np.nan)
    scaled_inputs[present] = transform(inputs[present], normalizer)
    scaled_targets = np.full(len(dataset), np.nan)
    scaled_targets[dataset.target_mask] = transform(dataset.targets[dataset.target_mask], normalizer)
    treated = dataset.replace(inputs=scaled_inputs, targets=scaled_targets, input_mask=present)
    return apply_masking(treated)


def prepare_training_set(
    series: HourlySeries, config: ForecastConfig
) -> Tuple[PredictionDataset, NormalizationParams, np.ndarray, Optional[SeriesImputer]]:
    """
    Shift, split and treat the training partition.

    Returns:
        (normalized training dataset, normalizer, training inputs in log
        space, fitted imputer or None for masking)
    """
    dataset = shift_pair(series, config.horizon_hours)
    train_set, _ = split_train_test(dataset, config.test_hours)
    start_hour = train_set.start.hour
    imputer = _make_imputer(config) if config.treatment.is_imputation else None
    inputs = _treated_inputs(train_set.inputs, start_hour, imputer, fit=True)
    present_inputs = inputs[~np.isnan(inputs)]
    present_targets = train_set.targets[train_set.target_mask]
    normalizer = fit_normalizer(np.concatenate([present_inputs, present_targets]))
    return _normalized(train_set, inputs, normalizer), normalizer, np.log1p(train_set.inputs), imputer


def train(series: HourlySeries, config: ForecastConfig) -> TrainedModel:
    """
    Train one model variant.

    Args:
        series: Complete history (gaps allowed) of one station
        config: Variant and training settings

    Returns:
        The trained model; identical inputs give bitwise-identical models
    """
    train_set, normalizer, reference, imputer = prepare_training_set(series, config)
    windows = make_windows(train_set, config.window_length, config.window_stride)
    params = init_params(config.cell_kind, config.hidden_size, seed=config.seed)
    optimizer = init_adam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))

    trace, skipped_total = [], 0
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(windows))
        losses, skipped = [], 0
        for first in range(0, len(order), config.batch_size):
            batch = order[first:first + config.batch_size]
            try:
                loss, _, grads = backward(
                    params, windows.inputs[batch], windows.targets[batch], windows.input_mask[batch]
                )
            except EmptyLossError:
                skipped += 1
                continue
            params, optimizer = adam_step(params, grads, optimizer)
            losses.append(loss)
        epoch_loss = float(np.mean(losses)) if losses else float("nan")
        trace.append(epoch_loss)
        skipped_total += skipped
        logger.info(f"{config.label} epoch {epoch}/{config.epochs}: loss {epoch_loss:.6f}, skipped batches {skipped}")

    return TrainedModel(
        params=params,
        normalizer=normalizer,
        config=config,
        training_loss_trace=trace,
        station_id=series.station_id,
        functional_class=series.functional_class,
        reference_inputs=reference,
        reference_start_hour=train_set.start.hour,
        skipped_batches=skipped_total,
        imputer=imputer,
    )


def predict(model: TrainedModel, input_series: HourlySeries) -> HourlySeries:
    """
    Predict raw volumes `horizon_hours` after every input hour.

    Args:
        model: Trained model
        input_series: Raw input hours, gaps allowed; treated like the training inputs

    Returns:
        Predicted hourly volumes starting at input start + horizon
    """
    if input_series.station_id != model.station_id:
        raise ModelMismatchError(
            f"Model was fitted for station {model.station_id}, got {input_series.station_id}"
        )
    config = model.config
    inputs = _treated_inputs(input_series.values, input_series.start.hour, model.fitted_imputer(), fit=False)
    present = ~np.isnan(inputs)
    scaled = np.zeros(len(inputs))
    scaled[present] = transform(inputs[present], model.normalizer)

    window = config.window_length
    full = (len(scaled) // window) * window
    predictions = np.empty(len(scaled))
    if full:
        result = forward(model.params, scaled[:full].reshape(-1, window), present[:full].reshape(-1, window))
        predictions[:full] = result.predictions.reshape(-1)
    if full < len(scaled):
        predictions[full:] = forward(model.params, scaled[full:], present[full:]).predictions[0]

    ceiling = (MAX_LOG_VOLUME - model.normalizer.x_min) / (model.normalizer.x_max - model.normalizer.x_min)
    volumes = np.maximum(inverse_transform(np.minimum(predictions, ceiling), model.normalizer), 0.0)
    return input_series.with_values(volumes, start=input_series.start + config.horizon_hours * HOUR)
