"""Report files: CSV with a fit footer, or JSON mirroring ExperimentReport."""
from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any

from . import SpdeLabError
from .const import FLOAT_FORMAT, LOWER_BOUND_COLUMNS, REPORT_COLUMNS
from .experiments import KIND_LOWER_BOUND, KIND_PERTURBATION, ErrorPoint, ExperimentReport

_LOGGER = logging.getLogger(__name__)

FORMAT_CSV = "csv"
FORMAT_JSON = "json"
PERTURBATION_COLUMNS = (*REPORT_COLUMNS, "bound")


class ReportWriteError(SpdeLabError):
    """Error to indicate a report file could not be written."""


def format_float(value: float | None) -> str:
    """17 significant digits, enough to round trip a double."""
    if value is None:
        return ""
    return format(value, FLOAT_FORMAT)


def _rows(report: ExperimentReport) -> tuple[tuple[str, ...], list[list[str]]]:
    def row(point: ErrorPoint) -> list[str]:
        return [str(point.N), format_float(point.h), format_float(point.estimate)]

    if report.kind == KIND_LOWER_BOUND:
        return LOWER_BOUND_COLUMNS, [
            [*row(point), format_float(point.bound)] for point in report.points
        ]
    rows = [
        [*row(point), format_float(point.std_error), str(point.samples)]
        for point in report.points
    ]
    if report.kind == KIND_PERTURBATION:
        return PERTURBATION_COLUMNS, [
            [*values, format_float(point.bound)] for values, point in zip(rows, report.points)
        ]
    return REPORT_COLUMNS, rows


def render_csv(report: ExperimentReport) -> str:
    """CSV body plus ``#`` footer lines with the fit and the configuration echo."""
    columns, rows = _rows(report)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    buffer.write(
        f"# order={format_float(report.fitted_order)}"
        f" intercept={format_float(report.fit_intercept)}"
        f" r2={format_float(report.fit_r2)}"
        f" seed={report.seed}\n"
    )
    if report.passed is not None:
        buffer.write(f"# passed={str(report.passed).lower()}\n")
    buffer.write(f"# config={json.dumps(report.config, sort_keys=True)}\n")
    return buffer.getvalue()


def render_json(report: ExperimentReport) -> str:
    """JSON document with one key per report field."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_report(report: ExperimentReport, path: str | Path, output_format: str = FORMAT_CSV) -> Path:
    """Write ``report`` to ``path``; rewriting with the same report is byte-identical."""
    if output_format == FORMAT_CSV:
        text = render_csv(report)
    elif output_format == FORMAT_JSON:
        text = render_json(report)
    else:
        raise ValueError(f"unknown report format {output_format!r}")
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as err:
        _LOGGER.error("Could not write report to %s: %s", path, err)
        raise ReportWriteError(f"Could not write report to {path}: {err}") from err
    _LOGGER.info("Wrote %s report with %s points to %s", report.kind, len(report.points), path)
    return path


def load_report(path: str | Path) -> ExperimentReport:
    """Read a JSON report written by emit_report."""
    with open(path, encoding="utf-8") as handle:
        data: dict[str, Any] = json.load(handle)
    return ExperimentReport.from_dict(data)
