"""Minimal NIfTI-1 reader and writer.

Covers exactly what the evaluation pipeline needs: single-file volumes
(magic ``n+1\\0``) and detached header/image pairs (``ni1\\0``), plain or
gzip-compressed, little or big endian, in the five common datatypes.
Orientation fields (qform/sform) are not interpreted; comparisons happen
in voxel space on grids that share a lattice.

The writer exists for fixtures and round-trip checks. It always emits
little-endian single-file volumes with the voxel payload at offset 352.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadDimensionError,
    BadMagicError,
    TruncatedPayloadError,
    UnsupportedDatatypeError,
)
from .grid import VoxelGrid, classify_values

HEADER_SIZE = 348

# NIfTI-1 datatype codes accepted by the loader.
_DTYPE_BY_CODE = {
    2: "u1",  # uint8
    4: "i2",  # int16
    8: "i4",  # int32
    16: "f4",  # float32
    64: "f8",  # float64
}
_CODE_BY_DTYPE = {
    np.dtype(np.uint8): 2,
    np.dtype(np.int16): 4,
    np.dtype(np.int32): 8,
    np.dtype(np.float32): 16,
    np.dtype(np.float64): 64,
}
_BITPIX_BY_CODE = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64}

_MAGIC_SINGLE = b"n+1\x00"
_MAGIC_PAIR = b"ni1\x00"

_GZIP_PREFIX = b"\x1f\x8b"


def _read_bytes(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == _GZIP_PREFIX:
        raw = gzip.decompress(raw)
    return raw


def _companion_image_path(header_path: Path) -> Path:
    """Map a .hdr(.gz) path to its .img(.gz) partner."""
    name = header_path.name
    for hdr_suffix, img_suffix in ((".hdr.gz", ".img.gz"), (".hdr", ".img")):
        if name.endswith(hdr_suffix):
            candidate = header_path.with_name(name[: -len(hdr_suffix)] + img_suffix)
            if candidate.exists():
                return candidate
            # A pair may mix compressed header with plain image or vice versa.
            alt = header_path.with_name(
                name[: -len(hdr_suffix)] + (".img" if img_suffix == ".img.gz" else ".img.gz")
            )
            if alt.exists():
                return alt
            raise TruncatedPayloadError(f"no companion image file for {header_path}")
    raise BadMagicError(f"{header_path} declares a detached pair but is not named .hdr")


def load_nifti(path: str | Path) -> VoxelGrid:
    """Load one 3D volume.

    Accepts dim[0] == 3, or dim[0] == 4 when the fourth axis has length
    one (a degenerate time axis, squeezed away). The value kind of the
    returned grid is inferred: integer payloads holding {0, 1} are
    binary, float payloads within [0, 1] are probability maps, all else
    raw intensity.

    Raises
    ------
    BadMagicError
        Header size or magic bytes do not identify NIfTI-1.
    BadDimensionError
        dim[] describes anything other than a single 3D volume.
    UnsupportedDatatypeError
        Datatype code outside {2, 4, 8, 16, 64}.
    TruncatedPayloadError
        File ends before the announced voxel data.
    """
    path = Path(path)
    raw = _read_bytes(path)
    if len(raw) < HEADER_SIZE:
        raise TruncatedPayloadError(
            f"{path}: {len(raw)} bytes is shorter than a NIfTI-1 header"
        )

    # sizeof_hdr doubles as the endianness probe.
    if struct.unpack_from("<i", raw, 0)[0] == HEADER_SIZE:
        order = "<"
    elif struct.unpack_from(">i", raw, 0)[0] == HEADER_SIZE:
        order = ">"
    else:
        raise BadMagicError(f"{path}: sizeof_hdr is not 348 in either byte order")

    magic = raw[344:348]
    if magic not in (_MAGIC_SINGLE, _MAGIC_PAIR):
        raise BadMagicError(f"{path}: bad magic {magic!r}")

    dim = struct.unpack_from(order + "8h", raw, 40)
    if dim[0] == 3:
        pass
    elif dim[0] == 4:
        if dim[4] != 1:
            raise BadDimensionError(
                f"{path}: 4D volume with dim[4]={dim[4]}, only a unit fourth axis is accepted"
            )
    else:
        raise BadDimensionError(f"{path}: dim[0]={dim[0]}, expected 3 or 4")
    shape = tuple(int(d) for d in dim[1:4])
    if any(d < 1 for d in shape):
        raise BadDimensionError(f"{path}: degenerate shape {shape}")

    datatype, bitpix = struct.unpack_from(order + "2h", raw, 70)
    if datatype not in _DTYPE_BY_CODE:
        raise UnsupportedDatatypeError(f"{path}: datatype code {datatype} not supported")
    dtype = np.dtype(order + _DTYPE_BY_CODE[datatype])
    if bitpix != _BITPIX_BY_CODE[datatype]:
        raise UnsupportedDatatypeError(
            f"{path}: bitpix {bitpix} inconsistent with datatype {datatype}"
        )

    pixdim = struct.unpack_from(order + "8f", raw, 76)
    spacing = tuple(float(p) for p in pixdim[1:4])

    vox_offset = int(struct.unpack_from(order + "f", raw, 108)[0])

    if magic == _MAGIC_SINGLE:
        payload_src = raw
        # Some writers leave vox_offset 0; the standard minimum is 352.
        offset = vox_offset if vox_offset >= HEADER_SIZE else 352
    else:
        payload_src = _read_bytes(_companion_image_path(path))
        offset = max(vox_offset, 0)

    count = shape[0] * shape[1] * shape[2]
    need = count * dtype.itemsize
    if len(payload_src) < offset + need:
        raise TruncatedPayloadError(
            f"{path}: voxel data needs {need} bytes at offset {offset}, "
            f"file holds {len(payload_src)}"
        )
    flat = np.frombuffer(payload_src, dtype=dtype, count=count, offset=offset)
    # NIfTI stores the fastest-varying axis first.
    values = flat.reshape(shape, order="F")
    if order == ">":
        values = values.astype(values.dtype.newbyteorder("<"))
    return VoxelGrid(values, spacing, classify_values(values))


def save_nifti(grid: VoxelGrid, path: str | Path) -> None:
    """Write a grid as a little-endian single-file NIfTI-1 volume.

    The dtype of the grid array must be one of the five supported codes.
    A ``.gz`` suffix selects gzip compression.
    """
    path = Path(path)
    dtype = grid.values.dtype.newbyteorder("=")
    if np.dtype(dtype) not in _CODE_BY_DTYPE:
        raise UnsupportedDatatypeError(f"cannot encode dtype {grid.values.dtype}")
    code = _CODE_BY_DTYPE[np.dtype(dtype)]

    header = bytearray(352)  # 348-byte header + 4-byte empty extension flag
    struct.pack_into("<i", header, 0, HEADER_SIZE)
    dim = (3, *grid.dims, 1, 1, 1, 1)
    struct.pack_into("<8h", header, 40, *dim)
    struct.pack_into("<2h", header, 70, code, _BITPIX_BY_CODE[code])
    pixdim = (1.0, *grid.spacing, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<8f", header, 76, *pixdim)
    struct.pack_into("<f", header, 108, 352.0)
    # scl_slope 1, scl_inter 0: values are stored as-is.
    struct.pack_into("<2f", header, 112, 1.0, 0.0)
    header[344:348] = _MAGIC_SINGLE

    payload = np.asarray(grid.values, dtype="<" + _DTYPE_BY_CODE[code]).tobytes(order="F")
    blob = bytes(header) + payload
    if path.name.endswith(".gz"):
        # mtime pinned so identical grids write identical bytes.
        blob = gzip.compress(blob, mtime=0)
    path.write_bytes(blob)
