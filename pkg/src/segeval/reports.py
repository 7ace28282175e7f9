"""Delimited report files.

All writers emit plain comma-separated files with ``\\n`` line endings
and a fixed column order, and they format numbers themselves (six
significant digits for metric values, exact integers for counts).
Together with the caller sorting rows by patient id and threshold, a
run writes byte-identical files regardless of worker count or host.

Undefined values appear as the literal token ``NA``. Infinity (only the
probabilistic distance produces it) appears as ``inf``: it is a defined
value, distinct from undefined.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional, Sequence

from .cohort import (
    CaseResult,
    CorrelationMatrix,
    FoldSummary,
    GroupSummary,
    VolumeBin,
)
from .confusion import METRIC_NAMES
from .pipeline import CaseError

NA = "NA"


def fmt_metric(v: Optional[float]) -> str:
    """Six significant digits; NA when undefined; inf allowed."""
    if v is None:
        return NA
    if math.isnan(v):
        return NA
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6g}"


def fmt_threshold(t: Optional[float]) -> str:
    return NA if t is None else f"{t:g}"


def _open_writer(path: Path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


PATIENT_COLUMNS = (
    "patient_id",
    "fold",
    "tumor_type",
    "threshold",
    "gt_volume_ml",
    "pred_volume_ml",
    "tp",
    "tn",
    "fp",
    "fn",
    *METRIC_NAMES,
    "hd95",
    "assd",
    "mhd",
    "detection_status",
    "object_recall",
    "object_precision",
    "object_f1",
    "fppp",
    "oassd",
    "n_gt_objects",
    "n_pred_objects",
    "n_matched_objects",
)


def write_patient_scores(path: Path, rows: Sequence[CaseResult]) -> None:
    """One row per patient and operating point, in the given order."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(PATIENT_COLUMNS)
        for r in rows:
            c = r.voxel.counts
            record = [
                r.patient_id,
                str(r.fold),
                r.tumor_type,
                fmt_threshold(r.threshold),
                fmt_metric(r.gt_volume_ml),
                fmt_metric(r.pred_volume_ml),
                str(c.tp),
                str(c.tn),
                str(c.fp),
                str(c.fn),
            ]
            record.extend(fmt_metric(getattr(r.voxel, name)) for name in METRIC_NAMES)
            if r.distances is None:
                record.extend([NA, NA, NA])
            else:
                record.extend(
                    fmt_metric(v)
                    for v in (r.distances.hd95, r.distances.assd, r.distances.mahalanobis)
                )
            record.append(r.detection.status.value)
            o = r.objects
            if o is None:
                record.extend([NA] * 8)
            else:
                record.extend(
                    [
                        fmt_metric(o.recall) if o.recall_defined else NA,
                        fmt_metric(o.precision) if o.precision_defined else NA,
                        fmt_metric(o.f1),
                        str(o.fppp),
                        fmt_metric(o.oassd),
                        str(o.n_pairs + o.n_unmatched_gt),
                        str(o.n_pairs + o.n_unmatched_pred),
                        str(o.n_pairs),
                    ]
                )
            w.writerow(record)


FOLD_COLUMNS = (
    "fold",
    "threshold",
    "n_patients",
    "dice_mean",
    "dice_std",
    "dice_tp_mean",
    "dice_tp_std",
    "n_detected",
    "pw_recall",
    "pw_precision",
    "pw_f1",
    "ow_recall",
    "ow_precision",
    "ow_f1",
)


def write_fold_summary(
    path: Path,
    folds: Sequence[FoldSummary],
    pooled: GroupSummary,
    threshold: Optional[float],
) -> None:
    """Per-fold rows plus one pooled row labeled ``pooled``."""
    thr = fmt_threshold(threshold)
    fh, w = _open_writer(path)
    with fh:
        w.writerow(FOLD_COLUMNS)
        for f in folds:
            w.writerow(
                [
                    str(f.fold),
                    thr,
                    str(f.n_patients),
                    fmt_metric(f.dice.mean),
                    fmt_metric(f.dice.std),
                    fmt_metric(f.dice_tp.mean) if f.dice_tp else NA,
                    fmt_metric(f.dice_tp.std) if f.dice_tp else NA,
                    str(f.detection.n_true_positive),
                    fmt_metric(f.detection.recall),
                    fmt_metric(f.detection.precision),
                    fmt_metric(f.detection.f1),
                    fmt_metric(f.ow_recall),
                    fmt_metric(f.ow_precision),
                    fmt_metric(f.ow_f1),
                ]
            )
        w.writerow(
            [
                "pooled",
                thr,
                str(pooled.n_patients),
                fmt_metric(pooled.dice.mean),
                fmt_metric(pooled.dice.std),
                fmt_metric(pooled.dice_tp.mean) if pooled.dice_tp else NA,
                fmt_metric(pooled.dice_tp.std) if pooled.dice_tp else NA,
                "",
                fmt_metric(pooled.pw_recall[0]) if pooled.pw_recall else NA,
                fmt_metric(pooled.pw_precision[0]) if pooled.pw_precision else NA,
                fmt_metric(pooled.pw_f1[0]) if pooled.pw_f1 else NA,
                fmt_metric(pooled.ow_recall[0]) if pooled.ow_recall else NA,
                fmt_metric(pooled.ow_precision[0]) if pooled.ow_precision else NA,
                fmt_metric(pooled.ow_f1[0]) if pooled.ow_f1 else NA,
            ]
        )


COHORT_COLUMNS = (
    "tumor_type",
    "threshold",
    "n_patients",
    "n_folds",
    "dice_mean",
    "dice_std",
    "dice_tp_mean",
    "dice_tp_std",
    "pw_recall_mean",
    "pw_recall_std",
    "pw_precision_mean",
    "pw_precision_std",
    "pw_f1_mean",
    "pw_f1_std",
    "ow_recall_mean",
    "ow_recall_std",
    "ow_precision_mean",
    "ow_precision_std",
    "ow_f1_mean",
    "ow_f1_std",
)


def _pair_cells(pair: Optional[tuple[float, float]]) -> list[str]:
    if pair is None:
        return [NA, NA]
    return [fmt_metric(pair[0]), fmt_metric(pair[1])]


def write_cohort_summary(
    path: Path, groups: Sequence[GroupSummary], threshold: Optional[float]
) -> None:
    """One row per tumor type, then the whole-cohort row."""
    thr = fmt_threshold(threshold)
    fh, w = _open_writer(path)
    with fh:
        w.writerow(COHORT_COLUMNS)
        for g in groups:
            row = [
                g.label,
                thr,
                str(g.n_patients),
                str(g.n_folds),
                fmt_metric(g.dice.mean),
                fmt_metric(g.dice.std),
                fmt_metric(g.dice_tp.mean) if g.dice_tp else NA,
                fmt_metric(g.dice_tp.std) if g.dice_tp else NA,
            ]
            for pair in (
                g.pw_recall,
                g.pw_precision,
                g.pw_f1,
                g.ow_recall,
                g.ow_precision,
                g.ow_f1,
            ):
                row.extend(_pair_cells(pair))
            w.writerow(row)


def write_correlation(
    r_path: Path, n_path: Path, matrix: CorrelationMatrix
) -> None:
    """The correlation matrix and its per-cell sample sizes."""
    fh, w = _open_writer(r_path)
    with fh:
        w.writerow(["metric", *matrix.metrics])
        for name, row in zip(matrix.metrics, matrix.r):
            w.writerow([name, *(fmt_metric(v) for v in row)])
    fh, w = _open_writer(n_path)
    with fh:
        w.writerow(["metric", *matrix.metrics])
        for name, row in zip(matrix.metrics, matrix.n):
            w.writerow([name, *(str(v) for v in row)])


VOLUME_BIN_COLUMNS = (
    "bin",
    "n",
    "volume_lo_ml",
    "volume_hi_ml",
    "whisker_lo",
    "q1",
    "median",
    "q3",
    "whisker_hi",
    "outliers",
)


def write_volume_bins(path: Path, bins: Sequence[VolumeBin]) -> None:
    """Five-number summaries per volume bin; outliers joined with ';'."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(VOLUME_BIN_COLUMNS)
        for b in bins:
            w.writerow(
                [
                    str(b.index),
                    str(b.n),
                    fmt_metric(b.volume_lo),
                    fmt_metric(b.volume_hi),
                    fmt_metric(b.whisker_lo),
                    fmt_metric(b.q1),
                    fmt_metric(b.median),
                    fmt_metric(b.q3),
                    fmt_metric(b.whisker_hi),
                    ";".join(fmt_metric(v) for v in b.outliers),
                ]
            )


def write_errors(path: Path, errors: Sequence[CaseError]) -> None:
    """Per-case failures; written even when empty so the file always exists."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(["patient_id", "stage", "error", "message"])
        for e in errors:
            w.writerow([e.patient_id, e.stage, e.error, e.message])
