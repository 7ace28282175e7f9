"""Cohort manifest: the list of cases a batch run evaluates.

A manifest is a CSV with the columns ``patient_id``, ``fold``,
``tumor_type``, ``gt_path``, ``pred_path``. Relative paths are resolved
against the directory containing the manifest file, so a cohort
directory can be moved as a unit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyManifestError, ManifestError

REQUIRED_COLUMNS = ("patient_id", "fold", "tumor_type", "gt_path", "pred_path")


@dataclass(frozen=True)
class PatientCase:
    """One row of the manifest."""

    patient_id: str
    fold: int
    tumor_type: str
    gt_path: Path
    pred_path: Path


@dataclass(frozen=True)
class Manifest:
    path: Path
    cases: tuple[PatientCase, ...]

    @property
    def folds(self) -> tuple[int, ...]:
        return tuple(sorted({c.fold for c in self.cases}))


def load_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest CSV.

    Fold ids must form a contiguous 0..k-1 set; an empty fold column
    means a single-fold cohort. Raises :class:`ManifestError` for a
    missing file, missing columns, duplicate patient ids, an
    unparseable or non-contiguous fold, or an empty case list.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    cases: list[PatientCase] = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ManifestError(f"{path}: missing manifest columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            pid = (row["patient_id"] or "").strip()
            if not pid:
                raise ManifestError(f"{path}:{lineno}: empty patient_id")
            if pid in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate patient_id {pid!r}")
            seen.add(pid)
            fold_raw = (row["fold"] or "").strip()
            if fold_raw == "":
                # Absent fold ids mean a single-fold cohort.
                fold = 0
            else:
                try:
                    fold = int(fold_raw)
                except ValueError:
                    raise ManifestError(
                        f"{path}:{lineno}: fold must be an integer, got {fold_raw!r}"
                    ) from None
            if fold < 0:
                raise ManifestError(f"{path}:{lineno}: fold must be non-negative")
            tumor_type = (row["tumor_type"] or "").strip()
            if not tumor_type:
                raise ManifestError(f"{path}:{lineno}: empty tumor_type")
            gt_raw = (row["gt_path"] or "").strip()
            pred_raw = (row["pred_path"] or "").strip()
            if not gt_raw or not pred_raw:
                raise ManifestError(f"{path}:{lineno}: empty gt_path or pred_path")
            cases.append(
                PatientCase(
                    patient_id=pid,
                    fold=fold,
                    tumor_type=tumor_type,
                    gt_path=(base / gt_raw).resolve() if not Path(gt_raw).is_absolute() else Path(gt_raw),
                    pred_path=(base / pred_raw).resolve() if not Path(pred_raw).is_absolute() else Path(pred_raw),
                )
            )
    if not cases:
        raise EmptyManifestError(f"{path}: manifest lists no cases")
    folds = sorted({c.fold for c in cases})
    if folds != list(range(len(folds))):
        raise ManifestError(
            f"{path}: fold ids must form a contiguous 0..k-1 set, got {folds}"
        )
    return Manifest(path=path, cases=tuple(cases))
