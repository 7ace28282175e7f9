"""Surface extraction and distance metrics.

Border voxels are foreground voxels with at least one six-connected
background neighbour; positions outside the array count as background,
so voxels touching the array edge are border voxels. Border coordinates
are physical: voxel index times spacing, in millimetres.

Directed distances use a KD-tree for the nearest-neighbour search, then
recompute each distance from the matched point with the plain
sqrt-of-sum-of-squares formula. That keeps the production values
bit-identical to a brute-force all-pairs evaluation: the tree is only
trusted to find the argmin, never for the distance value itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import EmptySurfaceError
from .grid import BinaryMask, check_geometry

_SIX_CONNECTED = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class SurfacePointSet:
    """Physical coordinates of a mask border, one row per border voxel.

    Rows follow the row-major scan order of the voxel indices, which
    makes downstream reductions order-deterministic.
    """

    points: np.ndarray  # (n, 3) float64, millimetres
    spacing: tuple[float, float, float]

    def __post_init__(self) -> None:
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"expected an (n, 3) array, got {self.points.shape}")
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return self.points.shape[0]


def extract_border(mask: BinaryMask) -> SurfacePointSet:
    """Border voxels of a mask as physical points.

    Raises :class:`EmptySurfaceError` for an empty mask; every nonempty
    mask has a nonempty border.
    """
    m = mask.as_bool()
    if not m.any():
        raise EmptySurfaceError("cannot extract the border of an empty mask")
    # Erosion with the 6-connected cross and zero padding: a voxel
    # survives only if all six neighbours (or the outside) are foreground.
    interior = ndimage.binary_erosion(m, structure=_SIX_CONNECTED, border_value=0)
    border = m & ~interior
    idx = np.argwhere(border)  # row-major order
    points = idx.astype(np.float64) * np.asarray(mask.spacing, dtype=np.float64)
    return SurfacePointSet(points=points, spacing=mask.spacing)


def directed_surface_distances(a: SurfacePointSet, b: SurfacePointSet) -> np.ndarray:
    """Distance from every point of ``a`` to its nearest point of ``b``.

    Returns a float64 vector aligned with the rows of ``a``.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptySurfaceError("directed distances require two nonempty point sets")
    tree = cKDTree(b.points)
    _, nearest = tree.query(a.points, k=1, workers=1)
    # Recompute from the matched coordinates; see module docstring.
    delta = a.points - b.points[nearest]
    return np.sqrt((delta * delta).sum(axis=1))


@dataclass(frozen=True)
class DistanceReport:
    """Symmetric surface distances of one mask pair, in millimetres."""

    hd95: float
    assd: float
    mahalanobis: float
    n_gt_border: int
    n_pred_border: int


def _pooled(d_gt: np.ndarray, d_pred: np.ndarray) -> np.ndarray:
    return np.concatenate([d_gt, d_pred])


def hd95(
    d_gt_to_pred: np.ndarray, d_pred_to_gt: np.ndarray, per_direction: bool = False
) -> float:
    """95th percentile Hausdorff distance.

    The default pools both directed distance lists and takes one 95th
    percentile (linear interpolation) over the pooled values.
    ``per_direction=True`` instead takes the percentile of each directed
    list separately and returns the larger one, for comparison against
    tools using that formulation.
    """
    if per_direction:
        return float(
            max(
                np.percentile(d_gt_to_pred, 95),
                np.percentile(d_pred_to_gt, 95),
            )
        )
    return float(np.percentile(_pooled(d_gt_to_pred, d_pred_to_gt), 95))


def assd(d_gt_to_pred: np.ndarray, d_pred_to_gt: np.ndarray) -> float:
    """Average symmetric surface distance: mean of the pooled lists."""
    return float(np.mean(_pooled(d_gt_to_pred, d_pred_to_gt)))


def _physical_points(mask: BinaryMask) -> np.ndarray:
    idx = np.argwhere(mask.as_bool())
    return idx.astype(np.float64) * np.asarray(mask.spacing, dtype=np.float64)


def mahalanobis(gt: BinaryMask, pred: BinaryMask, eps: float = 1e-6) -> float:
    """Mahalanobis distance between the two foreground point clouds.

    Computed over all foreground voxels (not only the border) in
    physical coordinates, with the count-weighted pooled covariance
    S = (n_g S_g + n_d S_d) / (n_g + n_d) of the biased per-cloud
    covariances. A singular S (masks that are flat or lines) receives
    ``eps`` on the diagonal before solving.
    """
    pg = _physical_points(gt)
    pd = _physical_points(pred)
    if pg.shape[0] == 0 or pd.shape[0] == 0:
        raise EmptySurfaceError("mahalanobis distance requires two nonempty masks")
    mu_g = pg.mean(axis=0)
    mu_d = pd.mean(axis=0)
    cg = pg - mu_g
    cd = pd - mu_d
    # n * biased covariance is just the scatter matrix.
    pooled = (cg.T @ cg + cd.T @ cd) / (pg.shape[0] + pd.shape[0])
    evals = np.linalg.eigvalsh(pooled)
    if evals[0] <= 1e-12 * max(1.0, float(evals[-1])):
        pooled = pooled + eps * np.eye(3)
    delta = mu_g - mu_d
    quad = float(delta @ np.linalg.solve(pooled, delta))
    return float(np.sqrt(max(quad, 0.0)))


def distance_report(
    gt: BinaryMask, pred: BinaryMask, per_direction_hd: bool = False
) -> DistanceReport:
    """All surface distances of one mask pair.

    Raises :class:`EmptySurfaceError` when either mask is empty; the
    caller decides whether that is an exclusion or an input error.
    """
    check_geometry(gt.grid, pred.grid)
    border_gt = extract_border(gt)
    border_pred = extract_border(pred)
    d_gt = directed_surface_distances(border_gt, border_pred)
    d_pred = directed_surface_distances(border_pred, border_gt)
    return DistanceReport(
        hd95=hd95(d_gt, d_pred, per_direction=per_direction_hd),
        assd=assd(d_gt, d_pred),
        mahalanobis=mahalanobis(gt, pred),
        n_gt_border=len(border_gt),
        n_pred_border=len(border_pred),
    )
