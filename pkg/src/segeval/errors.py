"""Exception taxonomy.

Every failure mode that callers are expected to branch on gets its own
class. Batch processing catches ``SegevalError`` per case and records it
instead of aborting the run.
"""


class SegevalError(Exception):
    """Base class for all errors raised by this package."""


class NiftiFormatError(SegevalError):
    """A file could not be decoded as NIfTI-1."""


class BadMagicError(NiftiFormatError):
    """Magic bytes or header size do not identify a NIfTI-1 file."""


class UnsupportedDatatypeError(NiftiFormatError):
    """Header datatype code is outside the supported set."""


class BadDimensionError(NiftiFormatError):
    """Header dim[] does not describe a single 3D volume."""


class TruncatedPayloadError(NiftiFormatError):
    """File ends before the voxel data announced by the header."""


class GeometryMismatchError(SegevalError):
    """Two grids do not share voxel geometry."""


class DimensionMismatchError(GeometryMismatchError):
    """Grid shapes differ."""


class SpacingMismatchError(GeometryMismatchError):
    """Voxel spacings differ beyond tolerance."""


class NotBinaryError(SegevalError):
    """A grid expected to be a 0/1 mask holds other values."""


class EmptySurfaceError(SegevalError):
    """A surface metric was requested for an empty mask."""


class EmptyGroundTruthError(SegevalError):
    """Detection status is undefined when the reference mask is empty."""


class DegenerateVarianceError(SegevalError):
    """A correlation was requested over a constant or too-small sample."""


class ManifestError(SegevalError):
    """Cohort manifest is missing, malformed, or inconsistent."""


class EmptyManifestError(ManifestError):
    """Manifest parsed but lists no cases."""


class ConfigError(SegevalError):
    """Run configuration is missing, malformed, or inconsistent."""
