"""Volume containers and voxel geometry.

A :class:`VoxelGrid` is one scan held in memory: a 3D array, the physical
voxel spacing in millimetres, and a tag describing how the values are to
be read (hard 0/1 labels, soft scores in [0, 1], or raw intensities).
Grid arrays are frozen on construction so instances can be shared across
threads and pickled to worker processes without defensive copies.

Masks are compared in voxel space. Orientation metadata from the source
file is deliberately not modelled; both inputs of a comparison must come
from the same resampling, which :func:`check_geometry` enforces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError, NotBinaryError, SpacingMismatchError

# Componentwise tolerance when deciding that two spacings agree, in mm.
SPACING_TOL_MM = 1e-4


class ValueKind(Enum):
    """How the values of a grid are to be interpreted."""

    BINARY = "binary"
    PROBABILITY = "probability"
    RAW = "raw-intensity"


def classify_values(values: np.ndarray) -> ValueKind:
    """Infer the value kind of an array.

    Integer arrays holding only {0, 1} are binary; anything else integer
    is raw. Float arrays within [0, 1] are soft scores, everything else
    (including NaN or infinities) is raw intensity. Float arrays are
    never classified as binary: a float file that happens to contain
    only 0.0 and 1.0 is still treated as a score map so that threshold
    sweeps apply to it.
    """
    if values.size == 0:
        return ValueKind.RAW
    if np.issubdtype(values.dtype, np.integer):
        lo = int(values.min())
        hi = int(values.max())
        if lo >= 0 and hi <= 1:
            return ValueKind.BINARY
        return ValueKind.RAW
    lo = values.min()
    hi = values.max()
    # NaN makes both comparisons false, which lands in RAW as intended.
    if lo >= 0.0 and hi <= 1.0:
        return ValueKind.PROBABILITY
    return ValueKind.RAW


@dataclass(frozen=True)
class VoxelGrid:
    """One 3D volume with its physical spacing.

    Parameters
    ----------
    values : np.ndarray
        3D array, any supported dtype. Frozen against writes.
    spacing : tuple of float
        Voxel edge lengths in mm along each axis, all positive.
    kind : ValueKind
        Interpretation tag. Consistency with the values is enforced:
        a binary grid may only hold {0, 1}, a probability grid only
        values in [0, 1].
    """

    values: np.ndarray
    spacing: tuple[float, float, float]
    kind: ValueKind

    def __post_init__(self) -> None:
        if self.values.ndim != 3:
            raise ValueError(f"expected a 3D array, got ndim={self.values.ndim}")
        if any(d < 1 for d in self.values.shape):
            raise ValueError(f"degenerate shape {self.values.shape}")
        if len(self.spacing) != 3:
            raise ValueError("spacing must have three components")
        sp = tuple(float(s) for s in self.spacing)
        if not all(np.isfinite(s) and s > 0 for s in sp):
            raise ValueError(f"spacing must be finite and positive, got {sp}")
        object.__setattr__(self, "spacing", sp)
        inferred = classify_values(self.values)
        if self.kind is ValueKind.BINARY and inferred is not ValueKind.BINARY:
            # Float 0/1 content is acceptable as an explicit binary tag.
            if not np.isin(self.values, (0, 1)).all():
                raise NotBinaryError("grid tagged binary holds values outside {0, 1}")
        if self.kind is ValueKind.PROBABILITY and inferred is ValueKind.RAW:
            raise ValueError("grid tagged probability holds values outside [0, 1]")
        self.values.setflags(write=False)

    @classmethod
    def from_array(
        cls, values: np.ndarray, spacing: tuple[float, float, float]
    ) -> "VoxelGrid":
        """Build a grid, inferring the value kind from the array."""
        return cls(np.asarray(values), spacing, classify_values(np.asarray(values)))

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.values.shape)

    @property
    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz


@dataclass(frozen=True)
class BinaryMask:
    """A hard 0/1 segmentation mask wrapping a binary grid."""

    grid: VoxelGrid

    def __post_init__(self) -> None:
        if self.grid.kind is not ValueKind.BINARY:
            raise NotBinaryError(f"mask requires a binary grid, got {self.grid.kind.value}")

    @classmethod
    def from_array(
        cls, values: np.ndarray, spacing: tuple[float, float, float]
    ) -> "BinaryMask":
        arr = np.asarray(values)
        if arr.dtype != np.uint8:
            if not np.isin(arr, (0, 1)).all():
                raise NotBinaryError("mask array holds values outside {0, 1}")
            arr = arr.astype(np.uint8)
        return cls(VoxelGrid(arr, spacing, ValueKind.BINARY))

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self.grid.spacing

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.grid.dims

    def as_bool(self) -> np.ndarray:
        """Boolean view of the mask (a copy; the grid stays frozen)."""
        return self.grid.values.astype(bool)

    def voxel_count(self) -> int:
        return int(np.count_nonzero(self.grid.values))


def as_binary_mask(grid: VoxelGrid) -> BinaryMask:
    """Coerce a grid into a mask.

    Binary grids pass through. Probability grids whose values are exactly
    0.0 or 1.0 are accepted (common for references stored as float).
    Anything else raises :class:`NotBinaryError`.
    """
    if grid.kind is ValueKind.BINARY:
        return BinaryMask(grid)
    if grid.kind is ValueKind.PROBABILITY and np.isin(grid.values, (0.0, 1.0)).all():
        return BinaryMask.from_array(grid.values.astype(np.uint8), grid.spacing)
    raise NotBinaryError(f"grid of kind {grid.kind.value} is not a 0/1 mask")


def binarize(prob_map: VoxelGrid, threshold: float) -> BinaryMask:
    """Threshold a probability map into a hard mask.

    Voxels with score greater than or equal to ``threshold`` become
    foreground. The comparison is inclusive so that a sweep ending at
    1.0 keeps voxels that are exactly 1.0.

    Parameters
    ----------
    prob_map : VoxelGrid
        Grid of kind PROBABILITY.
    threshold : float
        Cut point in the half-open interval (0, 1].
    """
    if prob_map.kind is not ValueKind.PROBABILITY:
        raise ValueError(f"binarize requires a probability grid, got {prob_map.kind.value}")
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    hard = (prob_map.values >= threshold).astype(np.uint8)
    return BinaryMask(VoxelGrid(hard, prob_map.spacing, ValueKind.BINARY))


def check_geometry(a: VoxelGrid, b: VoxelGrid) -> None:
    """Require two grids to live on the same voxel lattice.

    Shapes must match exactly; spacings must agree componentwise within
    ``SPACING_TOL_MM``. Raises the specific mismatch subclass so batch
    error reports can distinguish the two cases.
    """
    if a.dims != b.dims:
        raise DimensionMismatchError(f"grid dims differ: {a.dims} vs {b.dims}")
    for ax, (sa, sb) in enumerate(zip(a.spacing, b.spacing)):
        if abs(sa - sb) > SPACING_TOL_MM:
            raise SpacingMismatchError(
                f"spacing differs on axis {ax}: {sa!r} vs {sb!r} (tol {SPACING_TOL_MM} mm)"
            )


def physical_volume_ml(mask: BinaryMask) -> float:
    """Foreground volume in millilitres.

    Voxel count times voxel volume; 1 ml = 1000 mm^3.
    """
    return mask.voxel_count() * mask.grid.voxel_volume_mm3 / 1000.0
