"""
Evaluation report storage and export.
Reports are kept as JSON documents; the tabular export has one row per
variant, horizon and year.
"""

import os
import json
import uuid
import logging
from typing import List, Optional

import pandas as pd
from pydantic import ValidationError

from app.services.evaluation.schemas import EvaluationReport
from app.services.ingest.csv_io import TIMESTAMP_FORMAT

logger = logging.getLogger(__name__)

TABLE_COLUMNS = [
    "station",
    "cell",
    "treatment",
    "horizon_hours",
    "year",
    "predicted_aadt",
    "actual_aadt",
    "accuracy_pct",
    "missing_pct",
    "seed",
]


def report_table(report: EvaluationReport) -> pd.DataFrame:
    """One row per variant x horizon x year."""
    records = [row.model_dump(mode="json") for row in report.rows]
    return pd.DataFrame.from_records(records, columns=TABLE_COLUMNS + ["hourly_mape", "error"])


def write_report_csv(report: EvaluationReport, path: str):
    _ensure_parent(path)
    report_table(report).to_csv(path, index=False, lineterminator="\n")


def write_report_json(report: EvaluationReport, path: str):
    _ensure_parent(path)
    with open(path, "w") as f:
        f.write(report.model_dump_json(indent=2))


def read_report_json(path: str) -> EvaluationReport:
    with open(path, "r") as f:
        return EvaluationReport.model_validate_json(f.read())


def export_trends(report: EvaluationReport, directory: str) -> List[str]:
    """
    Write each hourly trend as a `timestamp,value` CSV.

    Returns:
        Paths of the written files
    """
    os.makedirs(directory, exist_ok=True)
    paths = []
    for trend in report.trends:
        start = pd.to_datetime(trend.start, format=TIMESTAMP_FORMAT)
        timestamps = pd.date_range(start, periods=len(trend.values), freq="h")
        frame = pd.DataFrame({"timestamp": timestamps.strftime(TIMESTAMP_FORMAT), "value": trend.values})
        path = os.path.join(directory, f"{report.station}-{trend.label}.csv")
        frame.to_csv(path, index=False, lineterminator="\n")
        paths.append(path)
    logger.info(f"Exported {len(paths)} trend files to {directory}")
    return paths


def _ensure_parent(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


class ReportFileStorage:
    """
    File storage handler for evaluation reports.
    """

    def __init__(self, directory: str = "data/reports"):
        """
        Initialize the storage in the given directory.

        Args:
            directory: Directory holding one JSON and one CSV file per report
        """
        self.directory = directory
        os.makedirs(self.directory, exist_ok=True)

    def save_report(self, report: EvaluationReport) -> str:
        """
        Store a report.

        Args:
            report: The report to store

        Returns:
            The new report ID
        """
        report_id = uuid.uuid4().hex
        write_report_json(report, os.path.join(self.directory, f"{report_id}.json"))
        write_report_csv(report, os.path.join(self.directory, f"{report_id}.csv"))
        logger.info(f"Stored report {report_id} ({len(report.rows)} rows)")
        return report_id

    def get_report(self, report_id: str) -> Optional[EvaluationReport]:
        """
        Get a report by ID.

        Args:
            report_id: ID of the report to retrieve

        Returns:
            The report if found, None otherwise
        """
        path = os.path.join(self.directory, f"{report_id}.json")
        if not os.path.exists(path):
            return None
        try:
            return read_report_json(path)
        except (ValidationError, json.JSONDecodeError) as e:
            logger.error(f"Error loading report {report_id}: {e}")
            return None
