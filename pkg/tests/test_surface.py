"""Border extraction and spatial distance metrics."""

import numpy as np
import pytest

from segeval.errors import EmptySurfaceError
from segeval.grid import BinaryMask
from segeval.oracles import oracle_border_points, oracle_directed_distances
from segeval.surface import (
    assd,
    directed_surface_distances,
    distance_report,
    extract_border,
    hd95,
    mahalanobis,
)
from tests.conftest import mask_of, sphere_mask


def _single_voxel(at, shape=(5, 5, 5), spacing=(1.0, 1.0, 1.0)):
    arr = np.zeros(shape, dtype=np.uint8)
    arr[at] = 1
    return mask_of(arr, spacing)


def test_border_single_voxel():
    pts = extract_border(_single_voxel((2, 2, 2)))
    np.testing.assert_array_equal(pts.points, [[2.0, 2.0, 2.0]])


def test_border_solid_cube_drops_center():
    arr = np.zeros((5, 5, 5), dtype=np.uint8)
    arr[1:4, 1:4, 1:4] = 1
    pts = extract_border(mask_of(arr))
    assert len(pts.points) == 26  # all but the center voxel


def test_border_face_voxel_counts_oob_as_background():
    arr = np.ones((3, 3, 3), dtype=np.uint8)
    pts = extract_border(mask_of(arr))
    assert len(pts.points) == 26  # only the very center is interior


def test_border_empty_raises():
    with pytest.raises(EmptySurfaceError):
        extract_border(mask_of(np.zeros((3, 3, 3), dtype=np.uint8)))


def test_border_matches_oracle_and_order():
    rng = np.random.default_rng(5)
    for _ in range(20):
        arr = (rng.random((6, 6, 6)) < 0.4).astype(np.uint8)
        if not arr.any():
            arr[0, 0, 0] = 1
        spacing = (1.0, 1.25, 2.0)
        got = extract_border(mask_of(arr, spacing)).points
        want = oracle_border_points(arr, spacing)
        np.testing.assert_array_equal(got, want)


def test_directed_distances_identity_and_single_pair():
    a = extract_border(_single_voxel((0, 0, 0)))
    b = extract_border(_single_voxel((3, 0, 0)))
    np.testing.assert_array_equal(directed_surface_distances(a, a), [0.0])
    np.testing.assert_array_equal(directed_surface_distances(a, b), [3.0])


def test_directed_distances_anisotropic():
    a = _single_voxel((0, 0, 0), spacing=(1.0, 1.0, 3.0))
    b = _single_voxel((0, 0, 1), spacing=(1.0, 1.0, 3.0))
    d = directed_surface_distances(extract_border(a), extract_border(b))
    np.testing.assert_array_equal(d, [3.0])


def test_hd95_assd_identical_masks_zero():
    m = mask_of(sphere_mask((12, 12, 12), (6, 6, 6), 4.0))
    report = distance_report(m, m)
    assert report.hd95 == 0.0
    assert report.assd == 0.0
    assert report.mahalanobis == pytest.approx(0.0, abs=1e-9)


def test_two_voxels_four_mm_apart():
    a = _single_voxel((0, 0, 0), shape=(6, 1, 1), spacing=(2.0, 1.0, 1.0))
    b = _single_voxel((2, 0, 0), shape=(6, 1, 1), spacing=(2.0, 1.0, 1.0))
    da = directed_surface_distances(extract_border(a), extract_border(b))
    db = directed_surface_distances(extract_border(b), extract_border(a))
    assert hd95(da, db) == 4.0
    assert assd(da, db) == 4.0


def test_shifted_cube_bounds():
    arr = np.zeros((14, 14, 14), dtype=np.uint8)
    arr[1:11, 1:11, 1:11] = 1
    shifted = np.zeros_like(arr)
    shifted[3:13, 1:11, 1:11] = 1
    ga, gb = extract_border(mask_of(arr)), extract_border(mask_of(shifted))
    da = directed_surface_distances(ga, gb)
    db = directed_surface_distances(gb, ga)
    assert max(da.max(), db.max()) == 2.0
    assert 0.0 <= hd95(da, db) <= 2.0


def test_pooled_vs_per_direction_flag():
    # Asymmetric geometry: a big cube against a single far voxel gives
    # very different directed lists, so the two HD95 readings split.
    arr = np.zeros((16, 16, 16), dtype=np.uint8)
    arr[2:10, 2:10, 2:10] = 1
    single = np.zeros_like(arr)
    single[12, 4, 4] = 1
    a, b = extract_border(mask_of(arr)), extract_border(mask_of(single))
    da = directed_surface_distances(a, b)
    db = directed_surface_distances(b, a)
    pooled = hd95(da, db)
    split = hd95(da, db, per_direction=True)
    assert split == max(np.percentile(da, 95), np.percentile(db, 95))
    assert pooled == np.percentile(np.concatenate([da, db]), 95)
    assert split != pooled


def test_symmetry_under_swap():
    rng = np.random.default_rng(11)
    a = (rng.random((7, 7, 7)) < 0.35).astype(np.uint8)
    b = (rng.random((7, 7, 7)) < 0.35).astype(np.uint8)
    a[3, 3, 3] = 1
    b[2, 2, 2] = 1
    ma, mb = mask_of(a, (1.0, 1.5, 2.0)), mask_of(b, (1.0, 1.5, 2.0))
    r1 = distance_report(ma, mb)
    r2 = distance_report(mb, ma)
    assert r1.hd95 == r2.hd95
    assert r1.assd == r2.assd
    assert r1.mahalanobis == pytest.approx(r2.mahalanobis, abs=1e-12)


def test_translation_equivariance():
    base = sphere_mask((20, 20, 20), (8, 8, 8), 4.0)
    pred = sphere_mask((20, 20, 20), (9, 8, 8), 3.5)
    r1 = distance_report(mask_of(base), mask_of(pred))
    r2 = distance_report(
        mask_of(np.roll(base, (2, 3, 1), axis=(0, 1, 2))),
        mask_of(np.roll(pred, (2, 3, 1), axis=(0, 1, 2))),
    )
    assert r1.hd95 == r2.hd95
    assert r1.assd == r2.assd
    assert r1.mahalanobis == pytest.approx(r2.mahalanobis, abs=1e-9)


def test_spacing_covariance():
    gt = sphere_mask((18, 18, 18), (9, 9, 9), 5.0)
    pred = sphere_mask((18, 18, 18), (10, 9, 8), 4.0)
    r1 = distance_report(mask_of(gt, (1.0, 1.0, 1.0)), mask_of(pred, (1.0, 1.0, 1.0)))
    r2 = distance_report(mask_of(gt, (2.0, 2.0, 2.0)), mask_of(pred, (2.0, 2.0, 2.0)))
    assert r2.hd95 == pytest.approx(2 * r1.hd95, abs=1e-9)
    assert r2.assd == pytest.approx(2 * r1.assd, abs=1e-9)
    # Mahalanobis absorbs uniform scale into the covariance.
    assert r2.mahalanobis == pytest.approx(r1.mahalanobis, abs=1e-9)


def test_distances_match_bruteforce_exactly():
    rng = np.random.default_rng(13)
    for _ in range(50):
        a = (rng.random((6, 6, 6)) < 0.5).astype(np.uint8)
        b = (rng.random((6, 6, 6)) < 0.5).astype(np.uint8)
        if not a.any() or not b.any():
            continue
        spacing = tuple(rng.uniform(0.5, 3.0, size=3))
        ga, gb = extract_border(mask_of(a, spacing)), extract_border(mask_of(b, spacing))
        got = directed_surface_distances(ga, gb)
        want = oracle_directed_distances(ga.points, gb.points)
        np.testing.assert_array_equal(got, want)


def test_mahalanobis_monotone_in_offset():
    values = []
    for offset in (1, 2, 3, 4):
        gt = np.zeros((20, 20, 20), dtype=np.uint8)
        pred = np.zeros_like(gt)
        gt[2:7, 2:7, 2:7] = 1
        pred[2 + offset : 7 + offset, 2:7, 2:7] = 1
        values.append(mahalanobis(mask_of(gt), mask_of(pred)))
    assert all(v > 0 for v in values)
    assert values == sorted(values)


def test_mahalanobis_hand_check_regularized():
    # Two single voxels: covariance is all zeros, so the regularized
    # metric reduces to Euclidean distance divided by sqrt(eps).
    a = _single_voxel((0, 0, 0), shape=(4, 1, 1))
    b = _single_voxel((2, 0, 0), shape=(4, 1, 1))
    v = mahalanobis(a, b)
    assert v == pytest.approx(2.0 / np.sqrt(1e-6), rel=1e-9)
    assert np.isfinite(v)


def test_mahalanobis_uses_all_voxels_not_border():
    # A solid cube and its hollow shell share a border but not a mean
    # covariance; a pure border implementation would see no difference
    # against a shifted copy.
    solid = np.zeros((16, 16, 16), dtype=np.uint8)
    solid[2:10, 2:10, 2:10] = 1
    hollow = solid.copy()
    hollow[3:9, 3:9, 3:9] = 0
    target = np.roll(solid, 3, axis=0)
    v_solid = mahalanobis(mask_of(solid), mask_of(target))
    v_hollow = mahalanobis(mask_of(hollow), mask_of(target))
    assert v_solid != pytest.approx(v_hollow, abs=1e-9)
