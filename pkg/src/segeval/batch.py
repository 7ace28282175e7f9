"""Batch orchestration: manifest in, report directory out.

Cases are evaluated independently (serially or on a process pool) and
failures are isolated: a case that cannot be loaded or scored becomes a
row in ``errors.csv`` while the rest of the cohort proceeds. All output
rows are sorted by patient id and threshold after the parallel phase,
so the report bytes do not depend on worker count or completion order.

Exit codes: 0 on success, 1 for configuration or manifest problems,
2 when not a single case could be evaluated.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .cohort import (
    CaseResult,
    cohort_summaries,
    fold_summaries,
    metrics_correlation,
    select_reporting_rows,
    summarize_group,
    volume_binned_summary,
    volume_correlation,
)
from .config import RunConfig
from .errors import DegenerateVarianceError, SegevalError
from .manifest import Manifest, load_manifest
from .pipeline import CaseError, EvalParams, evaluate_case_safe, evaluate_case_worker
from .reports import (
    fmt_metric,
    fmt_threshold,
    write_cohort_summary,
    write_correlation,
    write_errors,
    write_fold_summary,
    write_patient_scores,
    write_volume_bins,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_RESULTS = 2


@dataclass(frozen=True)
class RunOutcome:
    exit_code: int
    n_cases_ok: int
    n_cases_failed: int
    n_rows: int
    best_threshold: Optional[float]
    output_dir: Path


def _params_from_config(config: RunConfig) -> EvalParams:
    return EvalParams(
        thresholds=config.thresholds,
        detection_dice=config.detection_dice,
        min_component_voxels=config.min_component_voxels,
        connectivity=config.connectivity,
        with_surface="surface" in config.metrics,
        with_instance="instance" in config.metrics,
    )


def _sort_key(row: CaseResult):
    # Threshold-free rows sort before sweep rows of the same patient.
    return (row.patient_id, row.threshold is not None, row.threshold or 0.0)


def _evaluate_all(
    manifest: Manifest, params: EvalParams, workers: int
) -> tuple[list[CaseResult], list[CaseError]]:
    rows: list[CaseResult] = []
    errors: list[CaseError] = []
    if workers <= 1:
        outcomes = (evaluate_case_safe(case, params) for case in manifest.cases)
        for case_rows, err in outcomes:
            rows.extend(case_rows)
            if err is not None:
                errors.append(err)
    else:
        jobs = [(case, params) for case in manifest.cases]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for case_rows, err in pool.map(evaluate_case_worker, jobs):
                rows.extend(case_rows)
                if err is not None:
                    errors.append(err)
    rows.sort(key=_sort_key)
    errors.sort(key=lambda e: e.patient_id)
    return rows, errors


def run(config: RunConfig) -> RunOutcome:
    """Evaluate a cohort and write every report product.

    Raises :class:`SegevalError` subclasses for configuration-level
    problems (bad config values, unreadable manifest); per-case errors
    are data, not exceptions.
    """
    config = config.validated()
    manifest = load_manifest(config.manifest)
    params = _params_from_config(config)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows, errors = _evaluate_all(manifest, params, config.workers)
    write_errors(out / "errors.csv", errors)

    ok_ids = {r.patient_id for r in rows}
    if not ok_ids:
        return RunOutcome(
            exit_code=EXIT_NO_RESULTS,
            n_cases_ok=0,
            n_cases_failed=len(errors),
            n_rows=0,
            best_threshold=None,
            output_dir=out,
        )

    write_patient_scores(out / "patient_scores.csv", rows)

    reporting, thr = select_reporting_rows(rows)
    reporting.sort(key=_sort_key)

    folds = fold_summaries(reporting)
    pooled = summarize_group("pooled", reporting)
    write_fold_summary(out / "foldwise_summary.csv", folds, pooled, thr)
    write_cohort_summary(out / "cohort_summary.csv", cohort_summaries(reporting), thr)

    matrix = metrics_correlation(reporting, method=config.correlation_method)
    write_correlation(
        out / "correlation_matrix.csv", out / "correlation_matrix_n.csv", matrix
    )

    # Small cohorts get fewer bins rather than a binning error.
    n_bins = min(config.n_volume_bins, len(reporting))
    bins = volume_binned_summary(
        reporting,
        metric="dice",
        n_bins=n_bins,
        equal_width=config.equal_width_bins,
    )
    write_volume_bins(out / "volume_bins.csv", bins)

    if config.figures:
        from .figures import render_correlation, render_volume_bins

        render_volume_bins(out / "volume_bins.png", bins)
        render_correlation(out / "correlation_matrix.png", matrix)

    _write_run_info(out / "run_info.json", config, manifest, rows, errors, reporting, thr)

    return RunOutcome(
        exit_code=EXIT_OK,
        n_cases_ok=len(ok_ids),
        n_cases_failed=len(errors),
        n_rows=len(rows),
        best_threshold=thr,
        output_dir=out,
    )


def _write_run_info(
    path: Path,
    config: RunConfig,
    manifest: Manifest,
    rows: Sequence[CaseResult],
    errors: Sequence[CaseError],
    reporting: Sequence[CaseResult],
    thr: Optional[float],
) -> None:
    """Machine-readable run echo.

    Holds only result-determining settings (no worker count, no
    timestamps) so reruns of the same cohort produce the same file.
    """
    try:
        vc = volume_correlation([(r.gt_volume_ml, r.pred_volume_ml) for r in reporting])
    except DegenerateVarianceError:
        vc = None
    info = {
        "manifest": str(config.manifest),
        "n_cases": len(manifest.cases),
        "n_cases_ok": len({r.patient_id for r in rows}),
        "n_cases_failed": len(errors),
        "thresholds": [fmt_threshold(t) for t in config.thresholds],
        "detection_dice": config.detection_dice,
        "min_component_voxels": config.min_component_voxels,
        "connectivity": config.connectivity,
        "metrics": list(config.metrics),
        "best_threshold": fmt_threshold(thr),
        "volume_correlation": fmt_metric(vc),
    }
    path.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def validate(config: RunConfig) -> list[str]:
    """Dry-run check of a config and its cohort, computing no metrics.

    Every case gets its headers parsed, its geometry compared, and its
    value kinds checked (reference must be a 0/1 mask, prediction must
    not be raw intensity). Returns one diagnostic string per problem,
    each naming the patient; an empty list means the run can start.
    """
    try:
        config = config.validated()
    except SegevalError as exc:
        return [str(exc)]
    try:
        manifest = load_manifest(config.manifest)
    except SegevalError as exc:
        return [str(exc)]

    from .grid import ValueKind, as_binary_mask, check_geometry
    from .nifti import load_nifti

    problems: list[str] = []
    for case in manifest.cases:
        try:
            gt = load_nifti(case.gt_path)
        except (SegevalError, OSError) as exc:
            problems.append(f"{case.patient_id}: reference: {type(exc).__name__}: {exc}")
            continue
        try:
            pred = load_nifti(case.pred_path)
        except (SegevalError, OSError) as exc:
            problems.append(f"{case.patient_id}: prediction: {type(exc).__name__}: {exc}")
            continue
        try:
            check_geometry(gt, pred)
        except SegevalError as exc:
            problems.append(f"{case.patient_id}: {type(exc).__name__}: {exc}")
        try:
            as_binary_mask(gt)
        except SegevalError as exc:
            problems.append(f"{case.patient_id}: reference: {type(exc).__name__}: {exc}")
        if pred.kind is ValueKind.RAW:
            problems.append(
                f"{case.patient_id}: prediction holds raw intensities, "
                "not labels or scores"
            )
    return problems
