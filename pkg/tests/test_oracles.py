"""The oracle suites must actually catch planted defects."""

import numpy as np
import pytest

from segeval.oracles import (
    SUITE_NAMES,
    canonical_labels,
    oracle_flood_fill,
    oracle_voxel_metrics,
    production_voxel_candidate,
    run_components_suite,
    run_confusion_suite,
    run_selftest,
    run_surface_suite,
)


def test_clean_suites_pass():
    confusion = run_confusion_suite(production_voxel_candidate, total=10)
    assert confusion.passed
    assert confusion.cases == 286  # C(10+3, 3) compositions
    assert confusion.max_abs_dev < 1e-9

    surface = run_surface_suite(pairs=50)
    assert surface.passed
    assert surface.max_abs_dev == 0.0

    components = run_components_suite(samples=200, size=4)
    assert components.passed


def test_confusion_suite_catches_perturbed_dice():
    def crooked(tp, tn, fp, fn):
        panel = production_voxel_candidate(tp, tn, fp, fn)
        if panel["dice"] is not None:
            panel["dice"] = panel["dice"] * (1 + 1e-6) + 1e-9
        return panel

    result = run_confusion_suite(crooked, total=8)
    assert not result.passed
    assert any("dice" in f for f in result.failures)


def test_confusion_suite_catches_wrong_undefined_marker():
    def crooked(tp, tn, fp, fn):
        panel = production_voxel_candidate(tp, tn, fp, fn)
        if panel["ppv"] is None:
            panel["ppv"] = 0.0  # silently defined
        return panel

    result = run_confusion_suite(crooked, total=6)
    assert not result.passed


def test_surface_suite_catches_biased_distances():
    def crooked(gt, pred, spacing):
        from segeval.grid import BinaryMask
        from segeval.surface import (
            assd,
            directed_surface_distances,
            extract_border,
            hd95,
        )

        a = extract_border(BinaryMask.from_array(gt, spacing))
        b = extract_border(BinaryMask.from_array(pred, spacing))
        d_ab = directed_surface_distances(a, b) + 1e-7
        d_ba = directed_surface_distances(b, a) + 1e-7
        return hd95(d_ab, d_ba), assd(d_ab, d_ba)

    result = run_surface_suite(candidate=crooked, pairs=40)
    assert not result.passed


def test_components_suite_catches_wrong_connectivity():
    def crooked(mask, connectivity):
        from segeval.grid import BinaryMask
        from segeval.instances import connected_components

        swapped = {6: 26, 18: 18, 26: 6}[connectivity]
        return connected_components(
            BinaryMask.from_array(mask, (1.0, 1.0, 1.0)), connectivity=swapped
        ).labels

    result = run_components_suite(candidate=crooked, samples=300, size=4)
    assert not result.passed


def test_selftest_runs_all_by_default():
    results = run_selftest(confusion_total=6, surface_pairs=20, component_samples=50)
    assert [r.name for r in results] == list(SUITE_NAMES)
    assert all(r.passed for r in results)


def test_selftest_subset_and_empty():
    results = run_selftest(suites=("surface",), surface_pairs=10)
    assert [r.name for r in results] == ["surface"]
    assert run_selftest(suites=()) == []


def test_selftest_unknown_suite():
    with pytest.raises(ValueError):
        run_selftest(suites=("confusion", "nope"))


def test_suite_describe_is_one_line():
    result = run_confusion_suite(production_voxel_candidate, total=4)
    line = result.describe()
    assert "\n" not in line
    assert "confusion" in line
    assert "pass" in line.lower()


def test_oracle_voxel_metrics_is_independent_route():
    # The oracle derives fpr directly; production uses 1 - tnr. Same
    # numbers, different formulas.
    o = oracle_voxel_metrics(6, 54, 2, 2)
    p = production_voxel_candidate(6, 54, 2, 2)
    assert o["fpr"] == pytest.approx(p["fpr"], abs=1e-15)
    assert o["ari"] == pytest.approx(p["ari"], abs=1e-12)


def test_canonical_labels_normalizes_numbering():
    a = np.array([[[0, 2], [2, 0]], [[1, 0], [0, 1]]], dtype=np.int32)
    b = np.array([[[0, 1], [1, 0]], [[2, 0], [0, 2]]], dtype=np.int32)
    np.testing.assert_array_equal(canonical_labels(a), canonical_labels(b))


def test_flood_fill_simple_cases():
    arr = np.zeros((3, 3, 3), dtype=np.uint8)
    arr[0, 0, 0] = arr[2, 2, 2] = 1
    labels = oracle_flood_fill(arr, 6)
    assert labels[0, 0, 0] != labels[2, 2, 2]
    assert labels.max() == 2
