"""Connected components, lesion pairing, and detection status.

Components are labeled under a configurable neighbourhood (6, 18 or 26;
default 26) and numbered 1..K in array scan order of their first voxel.
A size filter drops components below a voxel-count floor and renumbers
the survivors densely, preserving order; applying it twice is a no-op.

Ground-truth and predicted components are paired greedily by pairwise
Dice: repeatedly take the highest-Dice unmatched pair. Ties prefer the
larger reference component, then the lower reference label, then the
lower predicted label, so the result does not depend on iteration order.
An assignment-problem variant that maximizes total Dice is available for
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import EmptyGroundTruthError
from .grid import BinaryMask
from .confusion import confusion_counts, dice_coefficient
from .surface import SurfacePointSet, assd, directed_surface_distances

_STRUCTURE_RANK = {6: 1, 18: 2, 26: 3}

DEFAULT_MIN_COMPONENT_VOXELS = 50
DEFAULT_DETECTION_DICE = 0.001


@dataclass(frozen=True)
class ComponentInfo:
    """One labeled component: its label, size, and tight bounding box."""

    label: int
    voxel_count: int
    bbox: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]  # half-open


@dataclass(frozen=True)
class ComponentLabeling:
    """Dense labeling of a mask plus the per-component table."""

    labels: np.ndarray  # int32, 0 = background
    components: tuple[ComponentInfo, ...]
    spacing: tuple[float, float, float]
    connectivity: int

    def __post_init__(self) -> None:
        self.labels.setflags(write=False)

    @property
    def n_components(self) -> int:
        return len(self.components)


def connected_components(mask: BinaryMask, connectivity: int = 26) -> ComponentLabeling:
    """Label the foreground of a mask into connected components."""
    if connectivity not in _STRUCTURE_RANK:
        raise ValueError(f"connectivity must be 6, 18 or 26, got {connectivity}")
    structure = ndimage.generate_binary_structure(3, _STRUCTURE_RANK[connectivity])
    labels, n = ndimage.label(mask.as_bool(), structure=structure)
    labels = labels.astype(np.int32)
    counts = np.bincount(labels.ravel(), minlength=n + 1)
    slices = ndimage.find_objects(labels, max_label=n)
    components = []
    for lbl in range(1, n + 1):
        sl = slices[lbl - 1]
        bbox = tuple((int(s.start), int(s.stop)) for s in sl)
        components.append(
            ComponentInfo(label=lbl, voxel_count=int(counts[lbl]), bbox=bbox)
        )
    return ComponentLabeling(
        labels=labels,
        components=tuple(components),
        spacing=mask.spacing,
        connectivity=connectivity,
    )


def filter_small(
    labeling: ComponentLabeling, min_voxels: int = DEFAULT_MIN_COMPONENT_VOXELS
) -> ComponentLabeling:
    """Drop components below ``min_voxels`` and renumber densely."""
    keep = [c for c in labeling.components if c.voxel_count >= min_voxels]
    if len(keep) == len(labeling.components):
        return labeling
    lut = np.zeros(len(labeling.components) + 1, dtype=np.int32)
    components = []
    for new_lbl, comp in enumerate(keep, start=1):
        lut[comp.label] = new_lbl
        components.append(
            ComponentInfo(label=new_lbl, voxel_count=comp.voxel_count, bbox=comp.bbox)
        )
    return ComponentLabeling(
        labels=lut[labeling.labels],
        components=tuple(components),
        spacing=labeling.spacing,
        connectivity=labeling.connectivity,
    )


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstancePairing:
    """Matched component pairs and the leftovers on both sides."""

    pairs: tuple[tuple[int, int, float], ...]  # (gt label, pred label, pair dice)
    unmatched_gt: tuple[int, ...]
    unmatched_pred: tuple[int, ...]


def _overlap_table(gt: ComponentLabeling, pred: ComponentLabeling) -> dict[tuple[int, int], int]:
    """Voxel overlap count for every (gt label, pred label) that intersects."""
    sel = (gt.labels > 0) & (pred.labels > 0)
    if not sel.any():
        return {}
    stride = pred.n_components + 1
    keys = gt.labels[sel].astype(np.int64) * stride + pred.labels[sel]
    uniq, counts = np.unique(keys, return_counts=True)
    return {
        (int(k // stride), int(k % stride)): int(n) for k, n in zip(uniq, counts)
    }


def pair_instances(
    gt: ComponentLabeling, pred: ComponentLabeling, strategy: str = "greedy"
) -> InstancePairing:
    """One-to-one matching of reference and predicted components.

    ``strategy="greedy"`` implements the iterated highest-Dice rule
    described in the module docstring. ``strategy="optimal"`` solves the
    assignment problem maximizing total pair Dice instead; it is offered
    for comparison studies and is not the default.
    """
    if gt.labels.shape != pred.labels.shape:
        raise ValueError("labelings cover different grids")
    gt_size = {c.label: c.voxel_count for c in gt.components}
    pred_size = {c.label: c.voxel_count for c in pred.components}
    overlaps = _overlap_table(gt, pred)
    candidates = [
        (g, p, 2.0 * n / (gt_size[g] + pred_size[p])) for (g, p), n in overlaps.items()
    ]

    pairs: list[tuple[int, int, float]] = []
    if strategy == "greedy":
        candidates.sort(key=lambda t: (-t[2], -gt_size[t[0]], t[0], t[1]))
        used_g: set[int] = set()
        used_p: set[int] = set()
        for g, p, d in candidates:
            if g not in used_g and p not in used_p:
                pairs.append((g, p, d))
                used_g.add(g)
                used_p.add(p)
    elif strategy == "optimal":
        from scipy.optimize import linear_sum_assignment

        if candidates:
            cost = np.zeros((gt.n_components, pred.n_components))
            for g, p, d in candidates:
                cost[g - 1, p - 1] = -d
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                if cost[r, c] < 0.0:
                    pairs.append((r + 1, c + 1, -cost[r, c]))
            pairs.sort(key=lambda t: (-t[2], -gt_size[t[0]], t[0], t[1]))
    else:
        raise ValueError(f"unknown pairing strategy {strategy!r}")

    matched_g = {g for g, _, _ in pairs}
    matched_p = {p for _, p, _ in pairs}
    return InstancePairing(
        pairs=tuple(pairs),
        unmatched_gt=tuple(c.label for c in gt.components if c.label not in matched_g),
        unmatched_pred=tuple(c.label for c in pred.components if c.label not in matched_p),
    )


# ---------------------------------------------------------------------------
# Patient-wise detection
# ---------------------------------------------------------------------------


class DetectionStatus(Enum):
    TRUE_POSITIVE = "true_positive"
    FALSE_NEGATIVE_WITH_FP = "false_negative_with_fp"
    FALSE_NEGATIVE_EMPTY = "false_negative_empty"


@dataclass(frozen=True)
class PatientDetection:
    status: DetectionStatus
    patient_dice: float


def patient_detection(
    gt: BinaryMask, pred: BinaryMask, dice_threshold: float = DEFAULT_DETECTION_DICE
) -> PatientDetection:
    """Classify one patient by whole-mask Dice.

    The patient counts as detected when Dice is strictly above
    ``dice_threshold`` (default 0.1%; a threshold of 0 reduces the rule
    to "any overlapping voxel"). Undetected patients split into those
    with spurious foreground and those with an empty prediction. The
    reference mask must be nonempty.
    """
    if gt.voxel_count() == 0:
        raise EmptyGroundTruthError("detection status needs a nonempty reference mask")
    d = dice_coefficient(confusion_counts(gt, pred))
    if d > dice_threshold:
        status = DetectionStatus.TRUE_POSITIVE
    elif pred.voxel_count() == 0:
        status = DetectionStatus.FALSE_NEGATIVE_EMPTY
    else:
        status = DetectionStatus.FALSE_NEGATIVE_WITH_FP
    return PatientDetection(status=status, patient_dice=d)


# ---------------------------------------------------------------------------
# Object-wise metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectMetricsRow:
    """Object-level detection scores for one patient.

    ``recall`` and ``precision`` are 0.0 when their denominator is
    empty; the ``*_defined`` flags record whether that value is a real
    rate or the undefined-as-0 stand-in, so aggregation can exclude the
    latter. ``oassd`` is ``None`` when no pair matched.
    """

    recall: float
    precision: float
    f1: float
    fppp: int
    oassd: Optional[float]
    n_pairs: int
    n_unmatched_gt: int
    n_unmatched_pred: int
    recall_defined: bool
    precision_defined: bool


def _component_border(labeling: ComponentLabeling, comp: ComponentInfo) -> SurfacePointSet:
    """Border of one component in isolation, in global physical coords.

    The component is cropped to its bounding box before border
    extraction. The box is tight, so every neighbour outside it is
    background for this component and the zero padding of the border
    test is exact; the box origin restores global indices.
    """
    sl = tuple(slice(lo, hi) for lo, hi in comp.bbox)
    origin = np.array([lo for lo, _ in comp.bbox], dtype=np.int64)
    sub = labeling.labels[sl] == comp.label
    interior = ndimage.binary_erosion(
        sub, structure=ndimage.generate_binary_structure(3, 1), border_value=0
    )
    idx = np.argwhere(sub & ~interior) + origin
    points = idx.astype(np.float64) * np.asarray(labeling.spacing, dtype=np.float64)
    return SurfacePointSet(points=points, spacing=labeling.spacing)


def object_metrics(
    pairing: InstancePairing, gt: ComponentLabeling, pred: ComponentLabeling
) -> ObjectMetricsRow:
    """Recall, precision, F1, false positives per patient, and object ASSD.

    Rates count matched pairs against the components on each side.
    F1 is the harmonic mean, 0.0 when recall and precision are both 0.
    Object ASSD averages the symmetric surface distance of each matched
    pair, each pair evaluated on its two components in isolation.
    """
    n_pairs = len(pairing.pairs)
    n_un_gt = len(pairing.unmatched_gt)
    n_un_pred = len(pairing.unmatched_pred)

    recall_defined = (n_pairs + n_un_gt) > 0
    precision_defined = (n_pairs + n_un_pred) > 0
    recall = n_pairs / (n_pairs + n_un_gt) if recall_defined else 0.0
    precision = n_pairs / (n_pairs + n_un_pred) if precision_defined else 0.0
    f1 = 0.0 if recall + precision == 0.0 else 2.0 * recall * precision / (recall + precision)

    gt_by_label = {c.label: c for c in gt.components}
    pred_by_label = {c.label: c for c in pred.components}
    oassd: Optional[float] = None
    if n_pairs > 0:
        per_pair = []
        for g, p, _ in pairing.pairs:
            bg = _component_border(gt, gt_by_label[g])
            bp = _component_border(pred, pred_by_label[p])
            d_g = directed_surface_distances(bg, bp)
            d_p = directed_surface_distances(bp, bg)
            per_pair.append(assd(d_g, d_p))
        oassd = float(np.mean(per_pair))

    return ObjectMetricsRow(
        recall=recall,
        precision=precision,
        f1=f1,
        fppp=n_un_pred,
        oassd=oassd,
        n_pairs=n_pairs,
        n_unmatched_gt=n_un_gt,
        n_unmatched_pred=n_un_pred,
        recall_defined=recall_defined,
        precision_defined=precision_defined,
    )
