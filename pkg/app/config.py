"""
Application settings.
Values come from the environment (optionally a `.env` file) with defaults that
work from the repository root.
"""

import os
import logging

from dotenv import load_dotenv, dotenv_values

load_dotenv()

DATA_DIR = os.getenv("FORECAST_DATA_DIR", "data")
MODELS_DIR = os.getenv("FORECAST_MODELS_DIR", os.path.join(DATA_DIR, "models"))
REPORTS_DIR = os.getenv("FORECAST_REPORTS_DIR", os.path.join(DATA_DIR, "reports"))
LOG_LEVEL = os.getenv("FORECAST_LOG_LEVEL", "INFO")
# The CLI keeps stderr for its one-line JSON errors unless asked for more
CLI_LOG_LEVEL = os.getenv("FORECAST_CLI_LOG_LEVEL", "WARNING")
GRID_JOBS = int(os.getenv("FORECAST_GRID_JOBS", str(os.cpu_count() or 1)))


def configure_logging(level: str = LOG_LEVEL):
    """Configure the root logger once for the CLI and the API."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def read_config_file(path: str) -> dict:
    """
    Read a flat key/value config file.

    Args:
        path: Path to a file of `key=value` lines (dotenv syntax)

    Returns:
        Mapping of keys to raw string values; empty values are dropped
    """
    values = dotenv_values(path)
    return {key: value for key, value in values.items() if value not in (None, "")}
