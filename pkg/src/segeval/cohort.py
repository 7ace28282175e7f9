"""Cohort-level aggregation.

Case-level results feed four kinds of summaries: pooled k-fold
estimates, patient-wise detection rates, volume-binned distributions,
and metric correlation matrices.

Pooled estimates combine per-fold (mean, std, n) triples into the mean
and standard deviation the concatenated sample would have. The
arithmetic runs on exact rationals so that, for equal fold sizes, the
pooled mean is bit-identical to the unweighted mean of the fold means.

Correlations are Pearson on exact rationals as well: the diagonal is
exactly 1.0, the matrix is exactly symmetric, and structurally
complementary columns (such as FPR vs TNR) reach exactly -1.0 instead
of an approximation. Cells use pairwise-complete rows; undefined and
non-finite values drop out per cell and the effective n is recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .confusion import METRIC_NAMES, VoxelMetricSet
from .errors import DegenerateVarianceError
from .instances import DetectionStatus, ObjectMetricsRow, PatientDetection
from .surface import DistanceReport

# ---------------------------------------------------------------------------
# Case-level row
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaseResult:
    """All metrics of one patient at one operating point.

    ``threshold`` is ``None`` for predictions that were already binary;
    such cases have a single threshold-free row. ``distances`` is
    ``None`` when surface metrics were skipped or undefined (empty
    prediction). ``objects`` is ``None`` when instance metrics were
    skipped.
    """

    patient_id: str
    fold: int
    tumor_type: str
    threshold: Optional[float]
    gt_volume_ml: float
    pred_volume_ml: float
    voxel: VoxelMetricSet
    detection: PatientDetection
    distances: Optional[DistanceReport]
    objects: Optional[ObjectMetricsRow]


def _voxel_getter(name: str) -> Callable[[CaseResult], Optional[float]]:
    return lambda r: getattr(r.voxel, name)


def _distance_getter(name: str) -> Callable[[CaseResult], Optional[float]]:
    return lambda r: None if r.distances is None else getattr(r.distances, name)


def _object_recall(r: CaseResult) -> Optional[float]:
    if r.objects is None or not r.objects.recall_defined:
        return None
    return r.objects.recall


def _object_precision(r: CaseResult) -> Optional[float]:
    if r.objects is None or not r.objects.precision_defined:
        return None
    return r.objects.precision


def _object_f1(r: CaseResult) -> Optional[float]:
    if r.objects is None:
        return None
    return r.objects.f1


def _fppp(r: CaseResult) -> Optional[float]:
    return None if r.objects is None else float(r.objects.fppp)


def _oassd(r: CaseResult) -> Optional[float]:
    return None if r.objects is None else r.objects.oassd


#: Name -> getter for every per-patient metric column usable in
#: correlation matrices and binned summaries.
METRIC_GETTERS: dict[str, Callable[[CaseResult], Optional[float]]] = {
    **{name: _voxel_getter(name) for name in METRIC_NAMES},
    "hd95": _distance_getter("hd95"),
    "assd": _distance_getter("assd"),
    "mhd": _distance_getter("mahalanobis"),
    "object_recall": _object_recall,
    "object_precision": _object_precision,
    "object_f1": _object_f1,
    "fppp": _fppp,
    "oassd": _oassd,
}

#: Default column set for the correlation matrix. FPR and FNR are left
#: out (they are exact complements of TNR and TPR); Jaccard is left out
#: in favour of the identical IoU column.
DEFAULT_CORRELATION_METRICS = (
    "dice",
    "tpr",
    "tnr",
    "ppv",
    "iou",
    "gce",
    "vs",
    "ravd",
    "nmi",
    "voi",
    "cks",
    "auc",
    "mcc",
    "pbd",
    "ari",
    "hd95",
    "mhd",
    "assd",
    "oassd",
)


# ---------------------------------------------------------------------------
# Pooled k-fold estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldStat:
    """Sample statistics of one fold: mean, sample std (ddof 1), size."""

    mean: float
    std: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("a fold must contain at least one sample")
        if self.std < 0:
            raise ValueError("std must be non-negative")


@dataclass(frozen=True)
class PooledEstimate:
    """Mean and std of the concatenation of all folds."""

    mean: float
    std: float
    n: int


def pooled_estimates(
    per_fold: Sequence[FoldStat | tuple[float, float, int]]
) -> PooledEstimate:
    """Combine per-fold statistics into whole-sample statistics.

    Accepts :class:`FoldStat` objects or bare (mean, std, n) triples.
    mean = sum(n_i mu_i) / sum(n_i); the pooled variance restores the
    within-fold sums of squares from (n_i - 1) s_i^2 and adds the
    between-fold spread, normalized by (sum(n_i) - 1). A total of one
    sample has zero variance by convention. The arithmetic is exact
    (rational), so equal-size folds reproduce the unweighted mean of
    the fold means bit for bit.
    """
    if not per_fold:
        raise ValueError("pooled estimates require at least one fold")
    folds = [
        f if isinstance(f, FoldStat) else FoldStat(mean=f[0], std=f[1], n=f[2])
        for f in per_fold
    ]
    total = sum(f.n for f in folds)
    mean = sum(f.n * Fraction(f.mean) for f in folds) / total
    if total == 1:
        var = Fraction(0)
    else:
        within = sum((f.n - 1) * Fraction(f.std) ** 2 for f in folds)
        between = sum(f.n * (Fraction(f.mean) - mean) ** 2 for f in folds)
        var = (within + between) / (total - 1)
    return PooledEstimate(mean=float(mean), std=math.sqrt(float(var)), n=total)


def fold_stat(values: Sequence[float]) -> FoldStat:
    """Mean and sample std of raw values; std is 0.0 for a single value."""
    n = len(values)
    if n == 0:
        raise ValueError("cannot summarize an empty fold")
    mean = sum(Fraction(v) for v in values) / n
    if n == 1:
        return FoldStat(mean=float(mean), std=0.0, n=1)
    var = sum((Fraction(v) - mean) ** 2 for v in values) / (n - 1)
    return FoldStat(mean=float(mean), std=math.sqrt(float(var)), n=n)


# ---------------------------------------------------------------------------
# Patient-wise detection rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetectionRates:
    """Patient-level detection counts and rates.

    Precision counts only undetected patients with spurious foreground
    as false positives; patients with an empty prediction cost recall
    but not precision. ``precision`` (and then ``f1``) is ``None`` when
    no patient was detected or mis-predicted.
    """

    recall: float
    precision: Optional[float]
    f1: Optional[float]
    n_true_positive: int
    n_false_negative_with_fp: int
    n_false_negative_empty: int
    n: int


def detection_rates(statuses: Sequence[DetectionStatus]) -> DetectionRates:
    if not statuses:
        raise ValueError("detection rates require at least one patient")
    n_tp = sum(1 for s in statuses if s is DetectionStatus.TRUE_POSITIVE)
    n_fp = sum(1 for s in statuses if s is DetectionStatus.FALSE_NEGATIVE_WITH_FP)
    n_empty = sum(1 for s in statuses if s is DetectionStatus.FALSE_NEGATIVE_EMPTY)
    recall = n_tp / len(statuses)
    precision = None if n_tp + n_fp == 0 else n_tp / (n_tp + n_fp)
    if precision is None:
        f1 = None
    elif recall + precision == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * recall * precision / (recall + precision)
    return DetectionRates(
        recall=recall,
        precision=precision,
        f1=f1,
        n_true_positive=n_tp,
        n_false_negative_with_fp=n_fp,
        n_false_negative_empty=n_empty,
        n=len(statuses),
    )


def dice_tp_values(rows: Sequence[CaseResult]) -> tuple[float, ...]:
    """Patient Dice values restricted to detected patients."""
    return tuple(
        r.voxel.dice
        for r in rows
        if r.detection.status is DetectionStatus.TRUE_POSITIVE
    )


def dice_tp(rows: Sequence[CaseResult]) -> Optional[PooledEstimate]:
    """Dice statistics over detected patients only.

    The slice is treated as one sample (mean, sample std, count).
    Returns ``None`` when no patient in the slice was detected.
    """
    values = dice_tp_values(rows)
    if not values:
        return None
    st = fold_stat(list(values))
    return PooledEstimate(mean=st.mean, std=st.std, n=st.n)


# ---------------------------------------------------------------------------
# Correlation
# ---------------------------------------------------------------------------


def _pearson_exact(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Pearson r on exact rationals; None for a constant column."""
    n = len(x)
    fx = [Fraction(v) for v in x]
    fy = [Fraction(v) for v in y]
    mx = sum(fx) / n
    my = sum(fy) / n
    dx = [v - mx for v in fx]
    dy = [v - my for v in fy]
    num = sum(a * b for a, b in zip(dx, dy))
    sxx = sum(a * a for a in dx)
    syy = sum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        return None
    rho = (num * num) / (sxx * syy)  # exact; <= 1 by Cauchy-Schwarz
    r = math.sqrt(float(rho))
    return r if num >= 0 else -r


def _average_ranks(values: Sequence[float]) -> list[float]:
    from scipy.stats import rankdata

    return [float(r) for r in rankdata(values, method="average")]


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pairwise metric correlations with per-cell sample sizes."""

    metrics: tuple[str, ...]
    r: tuple[tuple[Optional[float], ...], ...]
    n: tuple[tuple[int, ...], ...]
    method: str

    def value(self, a: str, b: str) -> Optional[float]:
        i = self.metrics.index(a)
        j = self.metrics.index(b)
        return self.r[i][j]

    def sample_size(self, a: str, b: str) -> int:
        i = self.metrics.index(a)
        j = self.metrics.index(b)
        return self.n[i][j]


def metrics_correlation(
    rows: Sequence[CaseResult],
    metrics: Sequence[str] = DEFAULT_CORRELATION_METRICS,
    method: str = "pearson",
) -> CorrelationMatrix:
    """Correlation matrix over per-patient metric columns.

    Each cell uses the rows where both metrics are defined and finite
    (pairwise-complete deletion; +inf distances drop out like undefined
    values). Cells with fewer than two complete rows or with a constant
    column are ``None``. ``method`` is "pearson" or "spearman"; Spearman
    is Pearson on average ranks.
    """
    if method not in ("pearson", "spearman"):
        raise ValueError(f"unknown correlation method {method!r}")
    unknown = [m for m in metrics if m not in METRIC_GETTERS]
    if unknown:
        raise KeyError(f"unknown metric columns: {unknown}")
    columns = {
        m: [METRIC_GETTERS[m](r) for r in rows] for m in metrics
    }
    k = len(metrics)
    r_cells: list[list[Optional[float]]] = [[None] * k for _ in range(k)]
    n_cells: list[list[int]] = [[0] * k for _ in range(k)]
    for i, mi in enumerate(metrics):
        for j in range(i, k):
            mj = metrics[j]
            xs, ys = [], []
            for vx, vy in zip(columns[mi], columns[mj]):
                if vx is None or vy is None:
                    continue
                if not (math.isfinite(vx) and math.isfinite(vy)):
                    continue
                xs.append(vx)
                ys.append(vy)
            n_cells[i][j] = n_cells[j][i] = len(xs)
            if len(xs) < 2:
                continue
            if method == "spearman":
                xs = _average_ranks(xs)
                ys = _average_ranks(ys)
            r = _pearson_exact(xs, ys)
            r_cells[i][j] = r_cells[j][i] = r
    return CorrelationMatrix(
        metrics=tuple(metrics),
        r=tuple(tuple(row) for row in r_cells),
        n=tuple(tuple(row) for row in n_cells),
        method=method,
    )


def volume_correlation(volume_pairs: Sequence[tuple[float, float]]) -> float:
    """Pearson r between reference and predicted volumes.

    Raises :class:`DegenerateVarianceError` for fewer than two pairs or
    when either side is constant.
    """
    pairs = [(g, p) for g, p in volume_pairs if math.isfinite(g) and math.isfinite(p)]
    if len(pairs) < 2:
        raise DegenerateVarianceError(
            f"volume correlation needs at least 2 finite pairs, got {len(pairs)}"
        )
    r = _pearson_exact([g for g, _ in pairs], [p for _, p in pairs])
    if r is None:
        raise DegenerateVarianceError("volume correlation of a constant volume column")
    return r


# ---------------------------------------------------------------------------
# Volume-binned summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeBin:
    """Five-number summary of one volume bin, Tukey whiskers."""

    index: int
    n: int
    volume_lo: float
    volume_hi: float
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple[float, ...]


def _five_number(index: int, vol_lo: float, vol_hi: float, values: Sequence[float]) -> VolumeBin:
    arr = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    outliers = arr[(arr < lo_fence) | (arr > hi_fence)]
    return VolumeBin(
        index=index,
        n=len(values),
        volume_lo=float(vol_lo),
        volume_hi=float(vol_hi),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        whisker_lo=float(inside.min()),
        whisker_hi=float(inside.max()),
        outliers=tuple(float(v) for v in np.sort(outliers)),
    )


def volume_binned_summary(
    rows: Sequence[CaseResult],
    metric: str = "dice",
    n_bins: int = 10,
    equal_width: bool = False,
) -> tuple[VolumeBin, ...]:
    """Distribution of one metric across reference-volume bins.

    The default packs patients, ordered by reference volume (ties broken
    by patient id), into ``n_bins`` equal-count bins; when the count
    does not divide evenly the leftmost bins take one extra patient.
    ``equal_width=True`` switches to bins of equal volume span instead
    (those may come out empty and are then dropped). Rows where the
    metric is undefined or non-finite are excluded up front; fewer
    usable rows than bins is an error.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    getter = METRIC_GETTERS[metric]
    usable = []
    for r in rows:
        v = getter(r)
        if v is not None and math.isfinite(v):
            usable.append((r.gt_volume_ml, r.patient_id, v))
    if len(usable) < n_bins:
        raise ValueError(
            f"need at least {n_bins} rows with a defined {metric} value, "
            f"got {len(usable)}"
        )
    usable.sort(key=lambda t: (t[0], t[1]))

    bins: list[VolumeBin] = []
    if equal_width:
        vols = [v for v, _, _ in usable]
        lo, hi = min(vols), max(vols)
        width = (hi - lo) / n_bins if hi > lo else 1.0
        for b in range(n_bins):
            b_lo = lo + b * width
            b_hi = lo + (b + 1) * width
            if b == n_bins - 1:
                members = [t for t in usable if b_lo <= t[0] <= hi]
            else:
                members = [t for t in usable if b_lo <= t[0] < b_hi]
            if members:
                bins.append(
                    _five_number(len(bins), b_lo, b_hi, [m for _, _, m in members])
                )
    else:
        m = len(usable)
        base, rem = divmod(m, n_bins)
        start = 0
        for b in range(n_bins):
            size = base + (1 if b < rem else 0)
            if size == 0:
                continue
            chunk = usable[start : start + size]
            start += size
            bins.append(
                _five_number(
                    len(bins), chunk[0][0], chunk[-1][0], [m_ for _, _, m_ in chunk]
                )
            )
    return tuple(bins)


# ---------------------------------------------------------------------------
# Threshold selection
# ---------------------------------------------------------------------------


def best_threshold(rows: Sequence[CaseResult]) -> Optional[float]:
    """Threshold with the highest cohort mean Dice; ties take the lower.

    Only sweep rows participate; returns ``None`` when every prediction
    was already binary.
    """
    by_thr: dict[float, list[float]] = {}
    for r in rows:
        if r.threshold is not None:
            by_thr.setdefault(r.threshold, []).append(r.voxel.dice)
    if not by_thr:
        return None
    scored = [
        (float(sum(Fraction(d) for d in dices) / len(dices)), thr)
        for thr, dices in by_thr.items()
    ]
    best_mean = max(s for s, _ in scored)
    return min(thr for s, thr in scored if s == best_mean)


def select_reporting_rows(
    rows: Sequence[CaseResult],
) -> tuple[list[CaseResult], Optional[float]]:
    """One row per patient: the best-threshold row, or the single
    threshold-free row for binary predictions."""
    thr = best_threshold(rows)
    selected = [r for r in rows if r.threshold is None or r.threshold == thr]
    return selected, thr


# ---------------------------------------------------------------------------
# Fold and cohort summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldSummary:
    """One fold at the reporting operating point.

    Dice statistics are per-patient mean and sample std within the
    fold; the detection and object rates come from the fold's pooled
    counts. Object rates are ``None`` when the fold has no components
    on the corresponding side (or instance metrics were skipped).
    """

    fold: int
    n_patients: int
    dice: FoldStat
    dice_tp: Optional[FoldStat]
    detection: DetectionRates
    ow_recall: Optional[float]
    ow_precision: Optional[float]
    ow_f1: Optional[float]
    n_pairs: int
    n_unmatched_gt: int
    n_unmatched_pred: int


def _object_rates(
    rows: Sequence[CaseResult],
) -> tuple[Optional[float], Optional[float], Optional[float], int, int, int]:
    pairs = un_gt = un_pred = 0
    saw_objects = False
    for r in rows:
        if r.objects is None:
            continue
        saw_objects = True
        pairs += r.objects.n_pairs
        un_gt += r.objects.n_unmatched_gt
        un_pred += r.objects.n_unmatched_pred
    if not saw_objects:
        return None, None, None, 0, 0, 0
    recall = pairs / (pairs + un_gt) if pairs + un_gt > 0 else None
    precision = pairs / (pairs + un_pred) if pairs + un_pred > 0 else None
    if recall is None or precision is None:
        f1 = None
    elif recall + precision == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * recall * precision / (recall + precision)
    return recall, precision, f1, pairs, un_gt, un_pred


def fold_summaries(rows: Sequence[CaseResult]) -> tuple[FoldSummary, ...]:
    """Per-fold summaries of reporting rows (one row per patient)."""
    by_fold: dict[int, list[CaseResult]] = {}
    for r in rows:
        by_fold.setdefault(r.fold, []).append(r)
    out = []
    for fold in sorted(by_fold):
        members = by_fold[fold]
        tp_dices = dice_tp_values(members)
        recall, precision, f1, pairs, un_gt, un_pred = _object_rates(members)
        out.append(
            FoldSummary(
                fold=fold,
                n_patients=len(members),
                dice=fold_stat([r.voxel.dice for r in members]),
                dice_tp=fold_stat(list(tp_dices)) if tp_dices else None,
                detection=detection_rates([r.detection.status for r in members]),
                ow_recall=recall,
                ow_precision=precision,
                ow_f1=f1,
                n_pairs=pairs,
                n_unmatched_gt=un_gt,
                n_unmatched_pred=un_pred,
            )
        )
    return tuple(out)


@dataclass(frozen=True)
class GroupSummary:
    """Pooled cross-validation summary for one patient group.

    Dice and Dice over detected patients pool the per-fold statistics
    into whole-sample estimates. The rate columns are mean and sample
    std over the fold-level rates; folds where a rate is undefined drop
    out of that column.
    """

    label: str
    n_patients: int
    n_folds: int
    dice: PooledEstimate
    dice_tp: Optional[PooledEstimate]
    pw_recall: Optional[tuple[float, float]]
    pw_precision: Optional[tuple[float, float]]
    pw_f1: Optional[tuple[float, float]]
    ow_recall: Optional[tuple[float, float]]
    ow_precision: Optional[tuple[float, float]]
    ow_f1: Optional[tuple[float, float]]


def _mean_std_over_folds(values: Sequence[Optional[float]]) -> Optional[tuple[float, float]]:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    st = fold_stat(defined)
    return st.mean, st.std


def summarize_group(label: str, rows: Sequence[CaseResult]) -> GroupSummary:
    """Pool one group of reporting rows across its folds."""
    folds = fold_summaries(rows)
    dice = pooled_estimates([f.dice for f in folds])
    tp_folds = [f.dice_tp for f in folds if f.dice_tp is not None]
    return GroupSummary(
        label=label,
        n_patients=len(rows),
        n_folds=len(folds),
        dice=dice,
        dice_tp=pooled_estimates(tp_folds) if tp_folds else None,
        pw_recall=_mean_std_over_folds([f.detection.recall for f in folds]),
        pw_precision=_mean_std_over_folds([f.detection.precision for f in folds]),
        pw_f1=_mean_std_over_folds([f.detection.f1 for f in folds]),
        ow_recall=_mean_std_over_folds([f.ow_recall for f in folds]),
        ow_precision=_mean_std_over_folds([f.ow_precision for f in folds]),
        ow_f1=_mean_std_over_folds([f.ow_f1 for f in folds]),
    )


def cohort_summaries(rows: Sequence[CaseResult]) -> tuple[GroupSummary, ...]:
    """One summary per tumor type plus an ``all`` row at the end."""
    by_type: dict[str, list[CaseResult]] = {}
    for r in rows:
        by_type.setdefault(r.tumor_type, []).append(r)
    out = [summarize_group(label, by_type[label]) for label in sorted(by_type)]
    out.append(summarize_group("all", list(rows)))
    return tuple(out)
