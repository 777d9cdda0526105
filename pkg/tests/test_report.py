import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdpbench.errors import ValidationError
from gdpbench.report import MetricSet, ResultRow, compute_metrics, emit_report


def row_with(metrics, **kw):
    base = dict(dataset="yearly", period="13-19", light="none",
                train_count=115, test_count=20, dims=13)
    base.update(kw)
    return ResultRow(metrics=metrics, **base)


def test_metrics_zero_on_match():
    m = compute_metrics([1.0, 2.0], [1.0, 2.0])
    assert (m.mae, m.mse, m.rmse) == (0.0, 0.0, 0.0)
    assert m.sample_count == 2


def test_metrics_hand_case():
    m = compute_metrics([1.0, 2.0, 3.0], [2.0, 2.0, 5.0])
    assert m.mae == 1.0
    assert m.mse == pytest.approx(5.0 / 3.0, rel=1e-15)
    assert m.rmse == pytest.approx(math.sqrt(5.0 / 3.0), rel=1e-15)


def test_metrics_rmse_squares_to_mse():
    rng = np.random.default_rng(0)
    for _ in range(5):
        m = compute_metrics(rng.normal(size=9), rng.normal(size=9))
        assert abs(m.rmse ** 2 - m.mse) <= 1e-12 * max(1.0, m.mse)


def test_metrics_symmetry():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=7), rng.normal(size=7)
    m1, m2 = compute_metrics(a, b), compute_metrics(b, a)
    assert (m1.mae, m1.mse, m1.rmse) == (m2.mae, m2.mse, m2.rmse)


@settings(max_examples=30)
@given(c=st.floats(min_value=0.0, max_value=100.0))
def test_metrics_scale_law(c):
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=6), rng.normal(size=6)
    base = compute_metrics(a, b)
    scaled = compute_metrics(c * a, c * b)
    assert scaled.mae == pytest.approx(c * base.mae, rel=1e-9, abs=1e-12)
    assert scaled.mse == pytest.approx(c * c * base.mse, rel=1e-9, abs=1e-12)


def test_metrics_gdp_component_only():
    preds = np.array([[5.0, 1.0], [7.0, 2.0]])
    targets = np.array([[0.0, 1.0], [0.0, 2.0]])
    m = compute_metrics(preds, targets, mode="multi_indicator")
    assert m.mse == 0.0


def test_metrics_empty_rejected():
    with pytest.raises(ValidationError):
        compute_metrics([], [])


def test_metricset_invariant_enforced():
    with pytest.raises(ValidationError):
        MetricSet(mae=1.0, mse=4.0, rmse=1.0, sample_count=3)


def make_metrics(value):
    return MetricSet(mae=value, mse=value * value, rmse=value, sample_count=20)


def test_markdown_layout(tmp_path):
    row = row_with({"MLP Best Valid Model": make_metrics(0.25),
                    "MLP Final Model": make_metrics(0.5)})
    path = tmp_path / "report.md"
    emit_report([row], "markdown", path)
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0].startswith("| Dataset | Period | Light | Train:Test | Dims |")
    assert "MLP Best Valid Model MAE" in lines[0]
    assert "MLP Final Model RMSE" in lines[0]
    assert "| 115: 20 | 13 |" in lines[2]
    assert "0.2500" in lines[2]


def test_report_deterministic_bytes(tmp_path):
    rows = [row_with({"Linear Regression Best Valid Model": make_metrics(0.3)}),
            row_with({"Linear Regression Best Valid Model": make_metrics(0.4)},
                     period="80-19")]
    p1, p2 = tmp_path / "a.md", tmp_path / "b.md"
    emit_report(rows, "markdown", p1)
    emit_report(list(reversed(rows)), "markdown", p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_round_trip_full_precision(tmp_path):
    value = 1.0 / 3.0
    row = row_with({"MLP Final Model": MetricSet(
        mae=value, mse=value * value, rmse=value, sample_count=20)})
    path = tmp_path / "report.csv"
    emit_report([row], "csv", path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1]
    full_idx = header.index("MLP Final Model MAE (full)")
    assert float(data[full_idx]) == value
    display_idx = header.index("MLP Final Model MAE")
    assert data[display_idx] == "0.3333"


def test_seq_length_column_only_for_windowed_rows(tmp_path):
    regression = row_with({"MLP Final Model": make_metrics(0.2)})
    windowed = row_with({"MLP Final Model": make_metrics(0.2)}, seq_length=8)
    p1 = tmp_path / "a.md"
    emit_report([regression], "markdown", p1)
    assert "Seq Length" not in p1.read_text()
    p2 = tmp_path / "b.md"
    emit_report([regression, windowed], "markdown", p2)
    assert "Seq Length" in p2.read_text()


def test_empty_rows_rejected(tmp_path):
    with pytest.raises(ValidationError):
        emit_report([], "markdown", tmp_path / "x.md")
