"""Manifest parsing and run configuration."""

import json

import pytest

from segeval.config import DEFAULT_THRESHOLDS, RunConfig, load_config
from segeval.errors import ConfigError, EmptyManifestError, ManifestError
from segeval.manifest import load_manifest

HEADER = "patient_id,fold,tumor_type,gt_path,pred_path\n"


def _write_manifest(tmp_path, body, name="manifest.csv"):
    p = tmp_path / name
    p.write_text(HEADER + body)
    return p


def test_manifest_happy_path(tmp_path):
    p = _write_manifest(
        tmp_path,
        "p1,0,meningioma,gt/p1.nii.gz,pred/p1.nii.gz\n"
        "p2,1,glioblastoma,gt/p2.nii.gz,/abs/p2.nii.gz\n",
    )
    m = load_manifest(p)
    assert [c.patient_id for c in m.cases] == ["p1", "p2"]
    assert m.folds == (0, 1)
    assert m.cases[0].gt_path == (tmp_path / "gt/p1.nii.gz").resolve()
    assert str(m.cases[1].pred_path) == "/abs/p2.nii.gz"


def test_manifest_missing_file(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "nope.csv")


def test_manifest_missing_columns(tmp_path):
    p = tmp_path / "manifest.csv"
    p.write_text("patient_id,fold\np1,0\n")
    with pytest.raises(ManifestError, match="missing manifest columns"):
        load_manifest(p)


def test_manifest_duplicate_patient(tmp_path):
    p = _write_manifest(
        tmp_path,
        "p1,0,x,a.nii,b.nii\np1,0,x,c.nii,d.nii\n",
    )
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(p)


def test_manifest_empty_is_an_error(tmp_path):
    p = _write_manifest(tmp_path, "")
    with pytest.raises(EmptyManifestError):
        load_manifest(p)


def test_manifest_blank_fold_means_single_fold(tmp_path):
    p = _write_manifest(tmp_path, "p1,,x,a.nii,b.nii\np2,,x,c.nii,d.nii\n")
    m = load_manifest(p)
    assert m.folds == (0,)


def test_manifest_fold_validation(tmp_path):
    p = _write_manifest(tmp_path, "p1,zero,x,a.nii,b.nii\n")
    with pytest.raises(ManifestError, match="integer"):
        load_manifest(p)
    p = _write_manifest(tmp_path, "p1,-1,x,a.nii,b.nii\n", name="m2.csv")
    with pytest.raises(ManifestError, match="non-negative"):
        load_manifest(p)
    # Folds {0, 2} skip 1: not a contiguous cross-validation layout.
    p = _write_manifest(
        tmp_path, "p1,0,x,a.nii,b.nii\np2,2,x,c.nii,d.nii\n", name="m3.csv"
    )
    with pytest.raises(ManifestError, match="contiguous"):
        load_manifest(p)


def test_manifest_empty_fields_rejected(tmp_path):
    for body in (
        ",0,x,a.nii,b.nii\n",
        "p1,0,,a.nii,b.nii\n",
        "p1,0,x,,b.nii\n",
        "p1,0,x,a.nii,\n",
    ):
        p = _write_manifest(tmp_path, body)
        with pytest.raises(ManifestError):
            load_manifest(p)


def test_config_defaults_and_kv_format(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        "# cohort run\n"
        "manifest = manifest.csv\n"
        "output_dir = out\n"
    )
    cfg = load_config(p).validated()
    assert cfg.manifest == tmp_path / "manifest.csv"
    assert cfg.output_dir == tmp_path / "out"
    assert cfg.thresholds == DEFAULT_THRESHOLDS
    assert cfg.detection_dice == 0.001
    assert cfg.min_component_voxels == 50
    assert cfg.connectivity == 26
    assert cfg.workers == 1
    assert cfg.figures is True


def test_config_json_format(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({
        "manifest": "m.csv",
        "output_dir": "/tmp/out",
        "thresholds": [0.5, 0.25],
        "workers": 4,
        "figures": False,
        "metrics": ["voxel", "surface"],
    }))
    cfg = load_config(p).validated()
    assert cfg.thresholds == (0.25, 0.5)  # sorted, deduplicated
    assert cfg.workers == 4
    assert cfg.figures is False
    assert cfg.metrics == ("voxel", "surface")


def test_config_kv_threshold_list(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        "manifest = m.csv\noutput_dir = out\nthresholds = 0.2, 0.4, 0.2\n"
    )
    cfg = load_config(p).validated()
    assert cfg.thresholds == (0.2, 0.4)


def test_config_unknown_key_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("manifest = m.csv\noutput_dir = out\nthreshholds = 0.5\n")
    with pytest.raises(ConfigError, match="unknown config keys"):
        load_config(p)


def test_config_missing_required(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("output_dir = out\n")
    with pytest.raises(ConfigError, match="manifest"):
        load_config(p)


def test_config_validation_rules(tmp_path):
    base = dict(manifest="m.csv", output_dir="o")

    def check(err_match, **kw):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({**base, **kw}))
        with pytest.raises(ConfigError, match=err_match):
            load_config(p).validated()

    check("outside", thresholds=[0.0, 0.5])
    check("outside", thresholds=[1.5])
    check("must not be empty", thresholds=[])
    check("detection_dice", detection_dice=1.0)
    check("connectivity", connectivity=10)
    check("workers", workers=0)
    check("voxel", metrics=["surface"])
    check("unknown metric groups", metrics=["voxel", "shape"])
    check("n_volume_bins", n_volume_bins=0)
    check("correlation_method", correlation_method="kendall")


def test_config_direct_construction_validates():
    cfg = RunConfig(manifest="m.csv", output_dir="o", thresholds=(0.9, 0.1))
    assert cfg.validated().thresholds == (0.1, 0.9)
