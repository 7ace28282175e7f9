"""segeval: evaluation of 3D binary segmentations against references.

The package computes a full panel of voxel-wise agreement metrics,
surface distances, and object-level detection scores per patient, and
aggregates them across cross-validation folds into pooled estimates,
volume-binned summaries, and metric correlation matrices. A batch CLI
(``segeval``) evaluates whole cohorts from a manifest and writes
delimited reports plus figures.
"""

__version__ = "0.1.0"

from .cohort import (
    CaseResult,
    CorrelationMatrix,
    DetectionRates,
    FoldStat,
    FoldSummary,
    GroupSummary,
    PooledEstimate,
    VolumeBin,
    best_threshold,
    cohort_summaries,
    detection_rates,
    dice_tp,
    dice_tp_values,
    fold_stat,
    fold_summaries,
    metrics_correlation,
    pooled_estimates,
    select_reporting_rows,
    summarize_group,
    volume_binned_summary,
    volume_correlation,
)
from .config import RunConfig, load_config
from .confusion import (
    ConfusionCounts,
    VoxelMetricSet,
    confusion_counts,
    information_metrics,
    metric_set_from_counts,
    overlap_metrics,
    probabilistic_metrics,
    volume_metrics,
    voxel_metric_set,
)
from .errors import (
    BadDimensionError,
    BadMagicError,
    ConfigError,
    DegenerateVarianceError,
    DimensionMismatchError,
    EmptyGroundTruthError,
    EmptyManifestError,
    EmptySurfaceError,
    GeometryMismatchError,
    ManifestError,
    NiftiFormatError,
    NotBinaryError,
    SegevalError,
    SpacingMismatchError,
    TruncatedPayloadError,
    UnsupportedDatatypeError,
)
from .grid import (
    BinaryMask,
    ValueKind,
    VoxelGrid,
    as_binary_mask,
    binarize,
    check_geometry,
    classify_values,
    physical_volume_ml,
)
from .instances import (
    ComponentInfo,
    ComponentLabeling,
    DetectionStatus,
    InstancePairing,
    ObjectMetricsRow,
    PatientDetection,
    connected_components,
    filter_small,
    object_metrics,
    pair_instances,
    patient_detection,
)
from .manifest import Manifest, PatientCase, load_manifest
from .nifti import load_nifti, save_nifti
from .pipeline import (
    CaseError,
    EvalParams,
    evaluate_case,
    evaluate_case_safe,
    threshold_sweep,
)
from .surface import (
    DistanceReport,
    SurfacePointSet,
    assd,
    directed_surface_distances,
    distance_report,
    extract_border,
    hd95,
    mahalanobis,
)
from .batch import RunOutcome, run, validate

__all__ = [name for name in dir() if not name.startswith("_")]
