"""MAE/MSE/RMSE metrics and table-style result reports.

Reports mirror the benchmark's table layout: one row per (dataset, period,
light mode, sequence length) with per-model metric triples. Markdown cells
are fixed to 4 decimals; the CSV adds a full-precision column next to each
display column so nothing is lost to rounding. Output bytes are a pure
function of the rows: ordering is canonical and no timestamps are embedded
unless explicitly requested by the caller's file naming.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

MARKDOWN = "markdown"
CSV = "csv"


@dataclass(frozen=True)
class MetricSet:
    mae: float
    mse: float
    rmse: float
    sample_count: int

    def __post_init__(self):
        if min(self.mae, self.mse, self.rmse) < 0:
            raise ValidationError("metrics must be non-negative")
        if self.sample_count < 1:
            raise ValidationError("metrics need at least one sample")
        if abs(self.rmse - math.sqrt(self.mse)) > 1e-12 * max(1.0, self.rmse):
            raise ValidationError("rmse inconsistent with mse")


def compute_metrics(preds, targets, mode: str = "scalar") -> MetricSet:
    """Standard MAE/MSE/RMSE. In multi_indicator mode only the GDP (last)
    component of each prediction row is scored."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ValidationError(f"shape mismatch {preds.shape} vs {targets.shape}")
    if preds.size == 0:
        raise ValidationError("metrics over an empty sample set")
    if mode == "multi_indicator":
        preds = preds.reshape(preds.shape[0], -1)[:, -1]
        targets = targets.reshape(targets.shape[0], -1)[:, -1]
    elif mode != "scalar":
        raise ValidationError(f"unknown metrics mode {mode!r}")
    err = preds.ravel() - targets.ravel()
    mse = float(np.mean(err ** 2))
    return MetricSet(mae=float(np.mean(np.abs(err))), mse=mse,
                     rmse=math.sqrt(mse), sample_count=err.size)


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    period: str
    light: str
    train_count: int
    test_count: int
    dims: int
    metrics: dict = field(default_factory=dict)  # model name -> MetricSet
    seq_length: int | None = None

    def __post_init__(self):
        if self.train_count < 1 or self.test_count < 1:
            raise ValidationError("train/test counts must be positive")

    def sort_key(self):
        return (self.dataset, self.period, self.light,
                -1 if self.seq_length is None else self.seq_length)


def _ordered(rows):
    if not rows:
        raise ValidationError("no result rows to report")
    return sorted(rows, key=ResultRow.sort_key)


def _model_columns(rows):
    names = sorted({name for row in rows for name in row.metrics})
    return names


_METRICS = ("MAE", "MSE", "RMSE")


def _metric_value(mset: MetricSet, metric: str) -> float:
    return getattr(mset, metric.lower())


def emit_report(rows, fmt: str, path) -> str:
    """Write the rows as a markdown or CSV table; returns the path."""
    rows = _ordered(rows)
    models = _model_columns(rows)
    with_seq = any(row.seq_length is not None for row in rows)
    if fmt == MARKDOWN:
        _emit_markdown(rows, models, with_seq, path)
    elif fmt == CSV:
        _emit_csv(rows, models, with_seq, path)
    else:
        raise ValidationError(f"unknown report format {fmt!r}")
    return str(path)


def _base_cells(row, with_seq):
    cells = [row.dataset, row.period, row.light]
    if with_seq:
        cells.append("" if row.seq_length is None else str(row.seq_length))
    cells.append(f"{row.train_count}: {row.test_count}")
    cells.append(str(row.dims))
    return cells


def _base_header(with_seq):
    header = ["Dataset", "Period", "Light"]
    if with_seq:
        header.append("Seq Length")
    header += ["Train:Test", "Dims"]
    return header


def _emit_markdown(rows, models, with_seq, path):
    header = _base_header(with_seq)
    for model in models:
        header += [f"{model} {m}" for m in _METRICS]
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        cells = _base_cells(row, with_seq)
        for model in models:
            mset = row.metrics.get(model)
            if mset is None:
                cells += ["", "", ""]
            else:
                cells += [f"{_metric_value(mset, m):.4f}" for m in _METRICS]
        lines.append("| " + " | ".join(cells) + " |")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _emit_csv(rows, models, with_seq, path):
    header = [h.lower().replace(":", "_").replace(" ", "_")
              for h in _base_header(with_seq)]
    for model in models:
        for m in _METRICS:
            header.append(f"{model} {m}")
            header.append(f"{model} {m} (full)")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            cells = _base_cells(row, with_seq)
            for model in models:
                mset = row.metrics.get(model)
                for m in _METRICS:
                    if mset is None:
                        cells += ["", ""]
                    else:
                        value = _metric_value(mset, m)
                        cells += [f"{value:.4f}", repr(value)]
            writer.writerow(cells)
