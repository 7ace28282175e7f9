"""Voxel-wise agreement metrics.

Every metric here is a function of the four confusion cardinalities
(TP, TN, FP, FN) of a mask pair: overlap ratios, volume agreement,
entropy-based partition scores, chance-corrected agreement, and
pair-counting indices. Counts are kept as Python ints so the pair
arithmetic for the Rand index stays exact at any volume size.

Undefined values are reported as ``None``, never silently coerced to 0,
so downstream aggregation can count exclusions. The conventions for the
degenerate cases are:

* Dice of two empty masks is 1.0 (both raters agree there is nothing).
  Every other vanishing denominator yields ``None``.
* The probabilistic distance is +inf when TP = 0 but FP + FN > 0, and
  0.0 when all three are 0. Infinity is a defined value here.
* The adjusted Rand index is 1.0 whenever FP = FN = 0 (perfect
  agreement), which also covers the two-empty-masks case where the
  pair-counting denominator degenerates.
* The normalized mutual information of two all-background masks is 1.0
  (the marginal entropies both vanish).

The false positive and false negative rates are computed as exact
complements ``1 - tnr`` and ``1 - tpr`` so the pair sums to 1.0 without
rounding residue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GeometryMismatchError  # re-export convenience  # noqa: F401
from .grid import BinaryMask, check_geometry

# ---------------------------------------------------------------------------
# Confusion counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    """The four cardinalities of a binary voxel-wise comparison."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "tn", "fp", "fn"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def x(self) -> int:
        """Total voxel count."""
        return self.tp + self.tn + self.fp + self.fn


def confusion_counts(gt: BinaryMask, pred: BinaryMask) -> ConfusionCounts:
    """Count TP, TN, FP, FN between a reference and a prediction.

    The masks must share geometry; see :func:`segeval.grid.check_geometry`.
    """
    check_geometry(gt.grid, pred.grid)
    g = gt.as_bool()
    d = pred.as_bool()
    tp = int(np.count_nonzero(g & d))
    fp = int(np.count_nonzero(d)) - tp
    fn = int(np.count_nonzero(g)) - tp
    tn = g.size - tp - fp - fn
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(num: int, den: int) -> Optional[float]:
    return None if den == 0 else num / den


# ---------------------------------------------------------------------------
# Overlap group
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OverlapMetrics:
    tpr: Optional[float]
    tnr: Optional[float]
    fpr: Optional[float]
    fnr: Optional[float]
    ppv: Optional[float]
    dice: Optional[float]
    jaccard: Optional[float]
    iou: Optional[float]
    gce: Optional[float]


def dice_coefficient(c: ConfusionCounts) -> float:
    """2TP / (2TP + FP + FN), defined as 1.0 for two empty masks."""
    den = 2 * c.tp + c.fp + c.fn
    if den == 0:
        return 1.0
    return 2 * c.tp / den


def jaccard_index(c: ConfusionCounts) -> Optional[float]:
    return _ratio(c.tp, c.tp + c.fp + c.fn)


def _gce_term(n1: int, n2: int) -> float:
    # n1 * (n1 + 2 n2) / (n1 + n2); the numerator vanishes with the
    # denominator, so the 0/0 case contributes nothing.
    den = n1 + n2
    if den == 0:
        return 0.0
    return n1 * (n1 + 2 * n2) / den


def global_consistency_error(c: ConfusionCounts) -> Optional[float]:
    """Lower of the two one-sided refinement errors, per voxel."""
    if c.x == 0:
        return None
    e1 = _gce_term(c.fn, c.tp) + _gce_term(c.fp, c.tn)
    e2 = _gce_term(c.fp, c.tp) + _gce_term(c.fn, c.tn)
    return min(e1, e2) / c.x


def overlap_metrics(c: ConfusionCounts) -> OverlapMetrics:
    tpr = _ratio(c.tp, c.tp + c.fn)
    tnr = _ratio(c.tn, c.tn + c.fp)
    j = jaccard_index(c)
    return OverlapMetrics(
        tpr=tpr,
        tnr=tnr,
        fpr=None if tnr is None else 1.0 - tnr,
        fnr=None if tpr is None else 1.0 - tpr,
        ppv=_ratio(c.tp, c.tp + c.fp),
        dice=dice_coefficient(c),
        jaccard=j,
        iou=j,  # identical by definition for two binary masks
        gce=global_consistency_error(c),
    )


# ---------------------------------------------------------------------------
# Volume group
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeMetrics:
    vs: Optional[float]
    ravd: Optional[float]


def volumetric_similarity(c: ConfusionCounts) -> Optional[float]:
    den = 2 * c.tp + c.fp + c.fn
    if den == 0:
        return None
    return 1.0 - abs(c.fp - c.fn) / den


def relative_volume_difference(c: ConfusionCounts) -> Optional[float]:
    """Signed (predicted - reference) / reference volume ratio."""
    den = c.tp + c.fn
    if den == 0:
        return None
    return (c.fp - c.fn) / den


def volume_metrics(c: ConfusionCounts) -> VolumeMetrics:
    return VolumeMetrics(vs=volumetric_similarity(c), ravd=relative_volume_difference(c))


# ---------------------------------------------------------------------------
# Information-theoretic group
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InformationMetrics:
    nmi: Optional[float]
    voi: Optional[float]
    mi: float
    h1: float
    h2: float
    h12: float


def _binary_entropy(count: int, x: int) -> float:
    # H of the split (count, x - count), with 0 log 0 = 0.
    h = 0.0
    if count > 0:
        p = count / x
        h -= p * math.log2(p)
    if count < x:
        q = 1.0 - count / x
        h -= q * math.log2(q)
    return h


def information_metrics(c: ConfusionCounts) -> InformationMetrics:
    """Mutual information of the two binary labelings, plus VOI and NMI.

    Joint cells with zero count contribute nothing (their probability is
    replaced by 1 before the log, and the factor count/x is already 0).
    NMI is defined as 1.0 when both marginal entropies vanish, and is
    clamped into [0, 1] against rounding residue.
    """
    x = c.x
    if x == 0:
        raise ValueError("information metrics require at least one voxel")
    h1 = _binary_entropy(c.fn + c.tp, x)
    h2 = _binary_entropy(c.fp + c.tp, x)
    h12 = 0.0
    for count in (c.tn, c.fn, c.fp, c.tp):
        p = 1.0 if count == 0 else count / x
        h12 -= math.log2(p) * (count / x)
    mi = h1 + h2 - h12
    voi = h1 + h2 - 2.0 * mi
    if h1 + h2 == 0.0:
        nmi: Optional[float] = 1.0
    else:
        nmi = min(1.0, max(0.0, 2.0 * mi / (h1 + h2)))
    return InformationMetrics(nmi=nmi, voi=voi, mi=mi, h1=h1, h2=h2, h12=h12)


# ---------------------------------------------------------------------------
# Chance-corrected and pair-counting group
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbabilisticMetrics:
    cks: Optional[float]
    auc: Optional[float]
    mcc: Optional[float]
    pbd: Optional[float]
    ari: Optional[float]


def cohen_kappa(c: ConfusionCounts) -> Optional[float]:
    x = c.x
    if x == 0:
        return None
    pe_num = (c.tp + c.fn) * (c.tp + c.fp) + (c.tn + c.fp) * (c.tn + c.fn)
    if pe_num == x * x:  # chance agreement 1, kappa undefined
        return None
    p0 = (c.tp + c.tn) / x
    pe = pe_num / (x * x)
    return (p0 - pe) / (1.0 - pe)


def balanced_accuracy(c: ConfusionCounts) -> Optional[float]:
    """Area under the one-point ROC approximation, 1 - (FPR + FNR)/2."""
    ov_tpr = _ratio(c.tp, c.tp + c.fn)
    ov_tnr = _ratio(c.tn, c.tn + c.fp)
    if ov_tpr is None or ov_tnr is None:
        return None
    fpr = 1.0 - ov_tnr
    fnr = 1.0 - ov_tpr
    return 1.0 - (fpr + fnr) / 2.0


def matthews_correlation(c: ConfusionCounts) -> Optional[float]:
    den_sq = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if den_sq == 0:
        return None
    r = (c.tp * c.tn - c.fp * c.fn) / math.sqrt(den_sq)
    return min(1.0, max(-1.0, r))


def probabilistic_distance(c: ConfusionCounts) -> float:
    """(FP + FN) / 2TP; +inf when nothing overlaps but voxels disagree."""
    disagreement = c.fp + c.fn
    if c.tp == 0:
        return 0.0 if disagreement == 0 else math.inf
    return disagreement / (2 * c.tp)


def rand_pair_counts(c: ConfusionCounts) -> tuple[int, int, int, int]:
    """Pair-counting cells (a, b, c, d) over all voxel pairs.

    a: pairs grouped together by both labelings; b: together in the
    reference only; c: together in the prediction only; d: separated by
    both. Exact integers; a + b + c + d = x(x-1)/2.
    """
    tp, tn, fp, fn = c.tp, c.tn, c.fp, c.fn
    a = (tp * (tp - 1) + fp * (fp - 1) + tn * (tn - 1) + fn * (fn - 1)) // 2
    b = tp * fn + tn * fp
    cc = tp * fp + tn * fn
    d = c.x * (c.x - 1) // 2 - (a + b + cc)
    return a, b, cc, d


def adjusted_rand_index(c: ConfusionCounts, as_printed: bool = False) -> Optional[float]:
    """Chance-adjusted Rand index over voxel pairs.

    The default evaluates the standard pair-counting form
    2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d)) with exact integer cells,
    short-circuited to 1.0 whenever FP = FN = 0. ``as_printed=True``
    switches to a legacy variant that reproduces a widely circulated
    misprint of the formula (``ab`` in place of ``ad`` and a ratio in
    place of the pair total d); it exists only for comparison against
    results computed from that misprint.
    """
    a, b, cc, d = rand_pair_counts(c)
    if as_printed:
        s = a + b + cc
        if s == 0:
            return None
        d_ratio = c.x * (c.x - 1) / (2.0 * s)
        num = 2.0 * (a * b - b * cc)
        den = cc * cc + b * b + 2.0 * a * b + (a + d_ratio) * (cc + b)
        if den == 0.0:
            return None
        return num / den
    if c.fp == 0 and c.fn == 0:
        return 1.0
    den = (a + b) * (b + d) + (a + cc) * (cc + d)
    if den == 0:
        return None
    return 2 * (a * d - b * cc) / den


def probabilistic_metrics(c: ConfusionCounts) -> ProbabilisticMetrics:
    return ProbabilisticMetrics(
        cks=cohen_kappa(c),
        auc=balanced_accuracy(c),
        mcc=matthews_correlation(c),
        pbd=probabilistic_distance(c),
        ari=adjusted_rand_index(c),
    )


# ---------------------------------------------------------------------------
# Full panel
# ---------------------------------------------------------------------------

METRIC_NAMES = (
    "tpr",
    "tnr",
    "fpr",
    "fnr",
    "ppv",
    "dice",
    "jaccard",
    "iou",
    "gce",
    "auc",
    "mcc",
    "cks",
    "nmi",
    "voi",
    "pbd",
    "ari",
    "vs",
    "ravd",
)


@dataclass(frozen=True)
class VoxelMetricSet:
    """All voxel-wise metrics of one mask pair, ``None`` where undefined."""

    counts: ConfusionCounts
    tpr: Optional[float]
    tnr: Optional[float]
    fpr: Optional[float]
    fnr: Optional[float]
    ppv: Optional[float]
    dice: Optional[float]
    jaccard: Optional[float]
    iou: Optional[float]
    gce: Optional[float]
    auc: Optional[float]
    mcc: Optional[float]
    cks: Optional[float]
    nmi: Optional[float]
    voi: Optional[float]
    pbd: Optional[float]
    ari: Optional[float]
    vs: Optional[float]
    ravd: Optional[float]

    def as_dict(self) -> dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def metric_set_from_counts(c: ConfusionCounts) -> VoxelMetricSet:
    """Evaluate the full panel from precomputed counts."""
    ov = overlap_metrics(c)
    vol = volume_metrics(c)
    if c.x == 0:
        # Zero voxels: only the convention-backed values survive.
        info = InformationMetrics(nmi=None, voi=None, mi=0.0, h1=0.0, h2=0.0, h12=0.0)
    else:
        info = information_metrics(c)
    prob = probabilistic_metrics(c)
    return VoxelMetricSet(
        counts=c,
        tpr=ov.tpr,
        tnr=ov.tnr,
        fpr=ov.fpr,
        fnr=ov.fnr,
        ppv=ov.ppv,
        dice=ov.dice,
        jaccard=ov.jaccard,
        iou=ov.iou,
        gce=ov.gce,
        auc=prob.auc,
        mcc=prob.mcc,
        cks=prob.cks,
        nmi=info.nmi,
        voi=info.voi,
        pbd=prob.pbd,
        ari=prob.ari,
        vs=vol.vs,
        ravd=vol.ravd,
    )


def voxel_metric_set(gt: BinaryMask, pred: BinaryMask) -> VoxelMetricSet:
    """Single-pass evaluation of the full voxel-wise panel for a mask pair."""
    return metric_set_from_counts(confusion_counts(gt, pred))
