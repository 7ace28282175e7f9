"""Shared test fixtures: synthetic masks, volumes, and cohorts."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from segeval.cohort import CaseResult
from segeval.confusion import confusion_counts, metric_set_from_counts
from segeval.grid import BinaryMask, ValueKind, VoxelGrid, physical_volume_ml
from segeval.instances import patient_detection
from segeval.nifti import save_nifti


def sphere_mask(shape, center, radius) -> np.ndarray:
    """Solid sphere as a uint8 array (voxel-index space)."""
    grids = np.ogrid[tuple(slice(0, s) for s in shape)]
    dist_sq = sum((g - c) ** 2 for g, c in zip(grids, center))
    return (dist_sq <= radius * radius).astype(np.uint8)


def mask_of(arr, spacing=(1.0, 1.0, 1.0)) -> BinaryMask:
    return BinaryMask.from_array(np.asarray(arr, dtype=np.uint8), spacing)


def case_row(
    gt,
    pred,
    patient_id: str = "p0",
    fold: int = 0,
    tumor_type: str = "other",
    threshold=None,
) -> CaseResult:
    """Voxel-level CaseResult for aggregation tests (no surface/objects)."""
    if not isinstance(gt, BinaryMask):
        gt = mask_of(gt)
    if not isinstance(pred, BinaryMask):
        pred = mask_of(pred)
    counts = confusion_counts(gt, pred)
    return CaseResult(
        patient_id=patient_id,
        fold=fold,
        tumor_type=tumor_type,
        threshold=threshold,
        gt_volume_ml=physical_volume_ml(gt),
        pred_volume_ml=physical_volume_ml(pred),
        voxel=metric_set_from_counts(counts),
        detection=patient_detection(gt, pred),
        distances=None,
        objects=None,
    )


def perturbed_sphere_pair(rng: np.random.Generator, shape=(24, 24, 24)):
    """A reference sphere and a degraded prediction of it.

    The prediction shifts the center, rescales the radius, and flips a
    random sprinkle of voxels, spanning a wide quality range.
    """
    center = rng.integers(8, shape[0] - 8, size=3)
    radius = rng.uniform(3.0, 6.5)
    gt = sphere_mask(shape, center, radius)
    shift = rng.integers(-3, 4, size=3)
    scale = rng.uniform(0.6, 1.3)
    pred = sphere_mask(shape, center + shift, radius * scale)
    flip = rng.random(shape) < rng.uniform(0.0, 0.02)
    pred = np.where(flip, 1 - pred, pred).astype(np.uint8)
    if not pred.any():
        pred[tuple(center)] = 1
    return gt, pred


def write_cohort(
    root: Path,
    n_cases: int,
    seed: int = 7,
    n_folds: int = 5,
    shape=(20, 20, 20),
    spacing=(1.0, 1.25, 1.5),
    binary_every: int = 4,
    broken: tuple[str, ...] = (),
) -> Path:
    """Write a synthetic NIfTI cohort and its manifest; returns the
    manifest path.

    Every ``binary_every``-th case stores the prediction as a uint8
    mask; the rest are float32 score maps. Patient ids listed in
    ``broken`` get a missing prediction file.
    """
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    types = ("glioblastoma", "lgg", "meningioma", "metastasis")
    rows = []
    for i in range(n_cases):
        pid = f"pat{i:03d}"
        center = rng.integers(6, shape[0] - 6, size=3)
        radius = rng.uniform(2.5, 5.5)
        gt = sphere_mask(shape, center, radius)
        save_nifti(
            VoxelGrid(gt, spacing, ValueKind.BINARY), root / f"{pid}_gt.nii.gz"
        )
        shift = rng.integers(-2, 3, size=3)
        pred_mask = sphere_mask(shape, center + shift, radius * rng.uniform(0.7, 1.2))
        pred_name = f"{pid}_pred.nii.gz"
        if i % binary_every == 0:
            save_nifti(
                VoxelGrid(pred_mask, spacing, ValueKind.BINARY), root / pred_name
            )
        else:
            soft = pred_mask.astype(np.float32) * rng.uniform(0.55, 1.0)
            blur = rng.random(shape).astype(np.float32) * 0.05
            prob = np.clip(soft + blur, 0.0, 1.0).astype(np.float32)
            save_nifti(
                VoxelGrid(prob, spacing, ValueKind.PROBABILITY), root / pred_name
            )
        if pid in broken:
            (root / pred_name).unlink()
        rows.append(
            {
                "patient_id": pid,
                "fold": i % n_folds,
                "tumor_type": types[i % len(types)],
                "gt_path": f"{pid}_gt.nii.gz",
                "pred_path": pred_name,
            }
        )
    manifest = root / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=("patient_id", "fold", "tumor_type", "gt_path", "pred_path")
        )
        writer.writeheader()
        writer.writerows(rows)
    return manifest
