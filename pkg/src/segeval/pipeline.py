"""Per-case evaluation: from a manifest row to metric rows.

One case yields one row per threshold for probability predictions, or a
single threshold-free row when the prediction file is already binary.
Raw-intensity predictions and empty or non-binary references are case
errors; the batch layer records them and keeps going.

Reference-side work (volume, border, component labeling) is computed
once per case and shared across the threshold sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .cohort import CaseResult
from .confusion import confusion_counts, metric_set_from_counts
from .errors import EmptyGroundTruthError, NotBinaryError, SegevalError
from .grid import BinaryMask, ValueKind, as_binary_mask, binarize, check_geometry, physical_volume_ml
from .instances import (
    connected_components,
    filter_small,
    object_metrics,
    pair_instances,
    patient_detection,
)
from .manifest import PatientCase
from .nifti import load_nifti
from .surface import distance_report


@dataclass(frozen=True)
class EvalParams:
    """The knobs of one evaluation run that affect metric values."""

    thresholds: tuple[float, ...]
    detection_dice: float = 0.001
    min_component_voxels: int = 50
    connectivity: int = 26
    with_surface: bool = True
    with_instance: bool = True


@dataclass(frozen=True)
class CaseError:
    """A case that could not be evaluated, with where and why."""

    patient_id: str
    stage: str
    error: str
    message: str


class _StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(str(cause))
        self.stage = stage
        self.cause = cause


def _load_mask_pair(case: PatientCase):
    try:
        gt_grid = load_nifti(case.gt_path)
    except (SegevalError, OSError) as exc:
        raise _StageError("load_gt", exc) from exc
    try:
        pred_grid = load_nifti(case.pred_path)
    except (SegevalError, OSError) as exc:
        raise _StageError("load_pred", exc) from exc
    try:
        check_geometry(gt_grid, pred_grid)
    except SegevalError as exc:
        raise _StageError("geometry", exc) from exc
    try:
        gt_mask = as_binary_mask(gt_grid)
    except SegevalError as exc:
        raise _StageError("validate_gt", exc) from exc
    if gt_mask.voxel_count() == 0:
        raise _StageError(
            "validate_gt", EmptyGroundTruthError("reference mask has no foreground")
        )
    if pred_grid.kind is ValueKind.RAW:
        raise _StageError(
            "validate_pred",
            NotBinaryError("prediction holds raw intensities, not labels or scores"),
        )
    return gt_mask, pred_grid


def _evaluate_at(
    case: PatientCase,
    params: EvalParams,
    gt_mask: BinaryMask,
    gt_ctx: dict,
    pred_mask: BinaryMask,
    threshold: Optional[float],
) -> CaseResult:
    counts = confusion_counts(gt_mask, pred_mask)
    voxel = metric_set_from_counts(counts)
    detection = patient_detection(gt_mask, pred_mask, params.detection_dice)

    distances = None
    if params.with_surface and pred_mask.voxel_count() > 0:
        distances = distance_report(gt_mask, pred_mask)

    objects = None
    if params.with_instance:
        pred_labeling = filter_small(
            connected_components(pred_mask, params.connectivity),
            params.min_component_voxels,
        )
        pairing = pair_instances(gt_ctx["labeling"], pred_labeling)
        objects = object_metrics(pairing, gt_ctx["labeling"], pred_labeling)

    return CaseResult(
        patient_id=case.patient_id,
        fold=case.fold,
        tumor_type=case.tumor_type,
        threshold=threshold,
        gt_volume_ml=gt_ctx["volume_ml"],
        pred_volume_ml=physical_volume_ml(pred_mask),
        voxel=voxel,
        detection=detection,
        distances=distances,
        objects=objects,
    )


def evaluate_case(case: PatientCase, params: EvalParams) -> list[CaseResult]:
    """Evaluate one manifest row at every applicable operating point.

    Raises :class:`_StageError`-wrapped package errors; use
    :func:`evaluate_case_safe` to get them as data instead.
    """
    gt_mask, pred_grid = _load_mask_pair(case)

    gt_ctx: dict = {"volume_ml": physical_volume_ml(gt_mask)}
    if params.with_instance:
        gt_ctx["labeling"] = filter_small(
            connected_components(gt_mask, params.connectivity),
            params.min_component_voxels,
        )

    rows: list[CaseResult] = []
    try:
        if pred_grid.kind is ValueKind.BINARY:
            pred_mask = as_binary_mask(pred_grid)
            rows.append(_evaluate_at(case, params, gt_mask, gt_ctx, pred_mask, None))
        else:
            for thr in params.thresholds:
                pred_mask = binarize(pred_grid, thr)
                rows.append(_evaluate_at(case, params, gt_mask, gt_ctx, pred_mask, thr))
    except SegevalError as exc:
        raise _StageError("metrics", exc) from exc
    return rows


def threshold_sweep(
    case: PatientCase,
    thresholds: Optional[tuple[float, ...]] = None,
    params: Optional[EvalParams] = None,
) -> list[CaseResult]:
    """Evaluate one case across a threshold sweep.

    Probability predictions yield one row per threshold (default: ten
    thresholds 0.1 to 1.0); binary predictions yield a single
    threshold-free row. This is :func:`evaluate_case` with the
    threshold list as the leading knob.
    """
    if params is None:
        params = EvalParams(thresholds=tuple(i / 10 for i in range(1, 11)))
    if thresholds is not None:
        from dataclasses import replace

        params = replace(params, thresholds=tuple(thresholds))
    return evaluate_case(case, params)


def evaluate_case_safe(
    case: PatientCase, params: EvalParams
) -> tuple[list[CaseResult], Optional[CaseError]]:
    """Evaluate one case, converting failures into a CaseError record."""
    try:
        return evaluate_case(case, params), None
    except _StageError as exc:
        return [], CaseError(
            patient_id=case.patient_id,
            stage=exc.stage,
            error=type(exc.cause).__name__,
            message=str(exc.cause),
        )
    except SegevalError as exc:
        return [], CaseError(
            patient_id=case.patient_id,
            stage="metrics",
            error=type(exc).__name__,
            message=str(exc),
        )


def evaluate_case_worker(args: tuple[PatientCase, EvalParams]):
    """Top-level adapter for process pools (must be picklable)."""
    case, params = args
    return evaluate_case_safe(case, params)
