"""
Domain errors shared by every service.
Each error carries a short machine code, the CLI exit code and the HTTP status
the API answers with.
"""

from typing import Optional


class ForecastError(Exception):
    """Base class for all forecasting errors."""

    code = "forecast_error"
    exit_code = 2
    status_code = 422

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.line = line

    def to_dict(self) -> dict:
        payload = {"error": self.code, "message": self.message}
        if self.line is not None:
            payload["line"] = self.line
        return payload


# Usage errors (exit 1)
class UsageError(ForecastError):
    code = "usage_error"
    exit_code = 1
    status_code = 400


class ForbiddenPathError(UsageError):
    code = "forbidden_path"
    status_code = 403


# Data errors (exit 2)
class DataError(ForecastError):
    code = "data_error"


class InvalidHorizonError(DataError):
    code = "invalid_horizon"


class InvalidSplitError(DataError):
    code = "invalid_split"


class InvalidWindowError(DataError):
    code = "invalid_window"


class DegenerateNormalizerError(DataError):
    code = "degenerate_normalizer"


class NoObservedDataError(DataError):
    code = "no_observed_data"


class InsufficientDataError(DataError):
    code = "insufficient_data"


class IncompleteMatrixError(DataError):
    code = "incomplete_matrix"


class MalformedSeriesError(DataError):
    code = "malformed_series"


class ZeroVolumeError(DataError):
    code = "zero_volume"


class PartialYearError(DataError):
    code = "partial_year"


class IncompleteActualsError(DataError):
    code = "incomplete_actuals"

    def __init__(self, message: str, year: Optional[int] = None):
        super().__init__(message)
        self.year = year


class InvalidActualError(DataError):
    code = "invalid_actual"


class ModelMismatchError(DataError):
    code = "model_mismatch"


# Numeric errors (exit 3)
class NumericError(ForecastError):
    code = "numeric_error"
    exit_code = 3
    status_code = 500


class UnexpectedError(NumericError):
    code = "unexpected_error"


class NumericDomainError(NumericError):
    code = "numeric_domain"


class EmptyLossError(NumericError):
    code = "empty_loss"
