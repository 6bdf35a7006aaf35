"""Datasets, answer judging and sliced reports."""

from .data import DataError, Sample, dump_samples, load_samples
from .judge import Judge, JudgeRule, Verdict, judge, parse_number
from .report import (
    COLUMNS,
    OVERALL,
    Report,
    ReportRow,
    UnknownSliceKeyError,
    cost_per_correct,
    emit_report,
    parse_report,
    render_report,
    rows_from_mapping,
    slice_metrics,
)

__all__ = [
    "COLUMNS",
    "DataError",
    "Judge",
    "JudgeRule",
    "OVERALL",
    "Report",
    "ReportRow",
    "Sample",
    "UnknownSliceKeyError",
    "Verdict",
    "cost_per_correct",
    "dump_samples",
    "emit_report",
    "judge",
    "load_samples",
    "parse_number",
    "parse_report",
    "render_report",
    "rows_from_mapping",
    "slice_metrics",
]
