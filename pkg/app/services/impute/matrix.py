"""
Reshaping between hourly sequences and day-by-hour matrices.
"""

from typing import Sequence, Union

import numpy as np

from app.errors import IncompleteMatrixError
from app.services.impute.schemas import HOURS, DayMatrix


def as_float_array(values: Sequence) -> np.ndarray:
    """Float array with NaN for None/NaN entries."""
    return np.array([np.nan if v is None else v for v in values], dtype=np.float64)


def to_day_matrix(values: Sequence, start_hour_of_day: int = 0) -> DayMatrix:
    """
    Lay an hourly sequence out as one row per day.

    Args:
        values: Hourly values, None or NaN where missing
        start_hour_of_day: Hour of day (0-23) of the first value

    Returns:
        The day matrix with padding cells flagged
    """
    if not 0 <= start_hour_of_day < HOURS:
        raise ValueError(f"start_hour_of_day must be in 0..23, got {start_hour_of_day}")
    array = values if isinstance(values, np.ndarray) else as_float_array(values)
    array = array.astype(np.float64, copy=False)
    length = len(array)
    rows = -(-(start_hour_of_day + length) // HOURS)
    flat = np.full(rows * HOURS, np.nan)
    flat[start_hour_of_day:start_hour_of_day + length] = array
    padding = np.ones(rows * HOURS, dtype=bool)
    padding[start_hour_of_day:start_hour_of_day + length] = False
    cells = flat.reshape(rows, HOURS)
    return DayMatrix(
        cells=cells,
        observed_mask=~np.isnan(cells),
        padding=padding.reshape(rows, HOURS),
        start_offset=start_hour_of_day,
        length=length,
    )


def from_day_matrix(matrix: Union[DayMatrix, np.ndarray], original_length: int, start_offset: int = None) -> np.ndarray:
    """
    Flatten a completed day matrix back to an hourly sequence.

    Args:
        matrix: Completed day matrix
        original_length: Number of hours the matrix was built from
        start_offset: Hour of day of the first value; taken from the matrix when omitted

    Returns:
        The hourly values with padding removed
    """
    if isinstance(matrix, DayMatrix):
        offset = matrix.start_offset if start_offset is None else start_offset
        cells = matrix.cells
    else:
        offset = start_offset or 0
        cells = np.asarray(matrix, dtype=np.float64)
    values = cells.reshape(-1)[offset:offset + original_length]
    if np.isnan(values).any():
        raise IncompleteMatrixError(f"{int(np.isnan(values).sum())} cells are still missing")
    return values.copy()
