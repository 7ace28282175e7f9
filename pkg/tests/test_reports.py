"""Delimited output formatting and figure rendering."""

import math

import numpy as np

from segeval.cohort import metrics_correlation, volume_binned_summary
from segeval.figures import render_correlation, render_volume_bins
from segeval.reports import fmt_metric, fmt_threshold, write_patient_scores
from tests.conftest import case_row


def test_fmt_metric_six_significant_digits():
    assert fmt_metric(0.123456789) == "0.123457"
    assert fmt_metric(1 / 3) == "0.333333"
    assert fmt_metric(0.5) == "0.5"
    assert fmt_metric(1.0) == "1"
    assert fmt_metric(1234567.0) == "1.23457e+06"


def test_fmt_metric_markers():
    assert fmt_metric(None) == "NA"
    assert fmt_metric(float("nan")) == "NA"
    assert fmt_metric(math.inf) == "inf"
    assert fmt_metric(-math.inf) == "-inf"


def test_fmt_threshold():
    assert fmt_threshold(None) == "NA"
    assert fmt_threshold(0.1) == "0.1"
    assert fmt_threshold(1.0) == "1"


def _some_rows(n=12, seed=2):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        gt = (rng.random((8, 8, 8)) < 0.3).astype(np.uint8)
        pred = (rng.random((8, 8, 8)) < 0.3).astype(np.uint8)
        gt[4, 4, 4] = 1
        rows.append(case_row(gt, pred, patient_id=f"p{i:03d}"))
    return rows


def test_patient_scores_uses_lf_line_endings(tmp_path):
    out = tmp_path / "patient_scores.csv"
    write_patient_scores(out, _some_rows())
    data = out.read_bytes()
    assert b"\r" not in data
    assert data.endswith(b"\n")
    header = data.split(b"\n", 1)[0].decode()
    for col in ("patient_id", "threshold", "dice", "hd95", "detection_status"):
        assert col in header.split(",")


def test_render_figures_write_files(tmp_path):
    rows = _some_rows(16)
    bins = volume_binned_summary(rows, n_bins=4)
    png1 = tmp_path / "volume_bins.png"
    render_volume_bins(png1, bins)
    assert png1.stat().st_size > 0

    matrix = metrics_correlation(rows, metrics=("dice", "ari", "tnr"))
    png2 = tmp_path / "correlation_matrix.png"
    render_correlation(png2, matrix)
    assert png2.stat().st_size > 0
