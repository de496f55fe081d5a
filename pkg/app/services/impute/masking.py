"""
Masking treatment: missing inputs hold the masking value and stay flagged so
the network skips those steps.
"""

import numpy as np

from app.services.series.schemas import PredictionDataset

MASK_VALUE = 0.0


def apply_masking(dataset: PredictionDataset) -> PredictionDataset:
    """Put the masking value at missing inputs; targets are left as they are."""
    inputs = np.where(dataset.input_mask, dataset.inputs, MASK_VALUE)
    return dataset.replace(inputs=inputs)
