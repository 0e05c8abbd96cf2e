"""Serialise metrics and comparison tables to JSON, markdown and CSV."""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence, TextIO, Union

import numpy as np

from .evaluation import ComparisonRow, ComparisonTable, MetricsReport

__all__ = [
    "METRIC_COLUMNS",
    "comparison_from_dict",
    "emit_report",
    "predictions_csv",
    "to_json",
    "to_markdown",
]

METRIC_COLUMNS = ("MAE", "MSE", "RMSE", "TVS")

Report = Union[MetricsReport, ComparisonTable]


def _doc(report: Report) -> dict:
    if isinstance(report, (MetricsReport, ComparisonTable)):
        return report.to_dict()
    raise TypeError(f"cannot serialise {type(report).__name__}")


def to_json(report: Report, config: Mapping[str, Any] | None = None) -> str:
    """Stable-key JSON at full float precision; ``config`` is embedded when given."""
    doc = _doc(report)
    if config is not None:
        doc = {**doc, "config": config}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cell(value: float | None) -> str:
    if value is None:
        return "undefined"
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def _metric_cells(report: MetricsReport | None) -> list[str]:
    if report is None:
        return ["error"] * 4
    return [_cell(report.mae), _cell(report.mse), _cell(report.rmse), _cell(report.tvs)]


def _row(cells: Sequence[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def to_markdown(report: Report, label: str = "Model") -> str:
    """Model-used / MAE / MSE / RMSE / TVS table with two decimals.

    Comparison tables get a second table of feature counts and a list of
    failed cells underneath.
    """
    lines = [_row(("Model Used", *METRIC_COLUMNS)), _row(["---"] * 5)]
    if isinstance(report, MetricsReport):
        lines.append(_row((label, *_metric_cells(report))))
        return "\n".join(lines) + "\n"
    if not isinstance(report, ComparisonTable):
        raise TypeError(f"cannot render {type(report).__name__}")
    for row in report.rows:
        lines.append(_row((row.label, *_metric_cells(row.report))))
    lines += ["", _row(("Model Used", "Features before", "Features after")), _row(["---"] * 3)]
    for row in report.rows:
        before = "-" if row.features_before is None else str(row.features_before)
        after = "-" if row.features_after is None else str(row.features_after)
        lines.append(_row((row.label, before, after)))
    failed = [r for r in report.rows if r.error]
    if failed:
        lines.append("")
        lines += [f"- {r.label}: {r.error}" for r in failed]
    return "\n".join(lines) + "\n"


def comparison_from_dict(doc: Mapping) -> ComparisonTable:
    rows = tuple(
        ComparisonRow(
            label=r["label"],
            model=r["model"],
            use_roughsets=r["use_roughsets"],
            report=None if r["metrics"] is None else MetricsReport.from_dict(r["metrics"]),
            features_before=r["features_before"],
            features_after=r["features_after"],
            error=r["error"],
        )
        for r in doc["rows"]
    )
    return ComparisonTable(rows, doc["split_seed"], doc["ratio"])


def predictions_csv(observed, predicted) -> str:
    obs = np.asarray(observed, dtype=np.float64)
    pred = np.asarray(predicted, dtype=np.float64)
    buf = io.StringIO()
    buf.write("index,observed,predicted\n")
    for i, (o, p) in enumerate(zip(obs, pred)):
        buf.write(f"{i},{float(o)!r},{float(p)!r}\n")
    return buf.getvalue()


def emit_report(
    report: Report,
    fmt: str,
    destination: str | Path | TextIO | None = None,
    config: Mapping[str, Any] | None = None,
) -> None:
    """Write ``report`` as json, markdown or csv to a path, a stream, or stdout."""
    if fmt == "json":
        text = to_json(report, config)
    elif fmt == "markdown":
        text = to_markdown(report)
    elif fmt == "csv":
        text = _csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if destination is None:
        sys.stdout.write(text)
    elif isinstance(destination, (str, Path)):
        Path(destination).write_text(text, encoding="utf-8")
    else:
        destination.write(text)


def _csv(report: Report) -> str:
    if isinstance(report, MetricsReport):
        rows = [("", report, None, None, None)]
    else:
        rows = [(r.label, r.report, r.features_before, r.features_after, r.error) for r in report.rows]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "mae", "mse", "rmse", "tvs", "r2", "n", "features_before", "features_after", "error"])
    for label, m, before, after, error in rows:
        metrics = [None] * 6 if m is None else [m.mae, m.mse, m.rmse, m.tvs, m.r2, m.n]
        counts = ["" if c is None else str(c) for c in (before, after)]
        writer.writerow([label, *("" if v is None else repr(v) for v in metrics), *counts, error or ""])
    return buf.getvalue()
