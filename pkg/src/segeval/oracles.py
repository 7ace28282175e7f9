"""Independent reference implementations and self-check suites.

Each reference here re-derives a production result along a different
route: the voxel metrics are transcribed symbol by symbol from their
textbook definitions (no code shared with the production panel), the
surface distances use an all-pairs O(n^2) scan instead of a KD-tree,
and component labeling uses breadth-first flood fill instead of the
ndimage labeler.

The suite runners take the candidate as a parameter so a test can
verify that the suite actually catches a wrong implementation, not just
that the production code passes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .confusion import ConfusionCounts, metric_set_from_counts
from .grid import BinaryMask
from .instances import connected_components, filter_small
from .surface import assd, directed_surface_distances, extract_border, hd95

# ---------------------------------------------------------------------------
# Voxel metric reference
# ---------------------------------------------------------------------------


def oracle_voxel_metrics(tp: int, tn: int, fp: int, fn: int) -> dict[str, Optional[float]]:
    """Literal evaluation of all 18 voxel metrics from the definitions.

    Deliberately naive: every rate is computed from its own quotient
    (for example FPR as FP/(FP+TN) rather than 1-TNR), the Rand cells
    come from binomial coefficients over the margins, and no helper is
    shared with the production module.
    """
    x = tp + tn + fp + fn
    out: dict[str, Optional[float]] = {}

    out["tpr"] = tp / (tp + fn) if (tp + fn) > 0 else None
    out["tnr"] = tn / (tn + fp) if (tn + fp) > 0 else None
    out["fpr"] = fp / (fp + tn) if (fp + tn) > 0 else None
    out["fnr"] = fn / (fn + tp) if (fn + tp) > 0 else None
    out["ppv"] = tp / (tp + fp) if (tp + fp) > 0 else None
    out["dice"] = 1.0 if (2 * tp + fp + fn) == 0 else 2 * tp / (2 * tp + fp + fn)
    out["jaccard"] = tp / (tp + fp + fn) if (tp + fp + fn) > 0 else None
    out["iou"] = out["jaccard"]

    # Global consistency error: min of the two one-sided errors. A term
    # whose denominator vanishes has a vanishing numerator as well.
    def side(n1for, n2for, n1rev, n2rev):
        t1 = 0.0 if (n1for + n2for) == 0 else n1for * (n1for + 2 * n2for) / (n1for + n2for)
        t2 = 0.0 if (n1rev + n2rev) == 0 else n1rev * (n1rev + 2 * n2rev) / (n1rev + n2rev)
        return t1 + t2

    if x == 0:
        out["gce"] = None
    else:
        e1 = side(fn, tp, fp, tn)
        e2 = side(fp, tp, fn, tn)
        out["gce"] = min(e1, e2) / x

    if out["fpr"] is None or out["fnr"] is None:
        out["auc"] = None
    else:
        out["auc"] = 1.0 - (out["fpr"] + out["fnr"]) / 2.0

    den_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    out["mcc"] = None if den_sq == 0 else (tp * tn - fp * fn) / math.sqrt(den_sq)

    if x == 0:
        out["cks"] = None
    else:
        p0 = (tp + tn) / x
        pe = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (x * x)
        out["cks"] = None if pe == 1.0 else (p0 - pe) / (1.0 - pe)

    if x == 0:
        out["nmi"] = None
        out["voi"] = None
    else:

        def entropy(p: float) -> float:
            h = 0.0
            if p > 0.0:
                h -= p * math.log2(p)
            q = 1.0 - p
            if q > 0.0:
                h -= q * math.log2(q)
            return h

        h1 = entropy((fn + tp) / x)
        h2 = entropy((fp + tp) / x)
        h12 = 0.0
        for cell in (tn, fn, fp, tp):
            pcell = 1.0 if cell == 0 else cell / x
            h12 -= math.log2(pcell) * (cell / x)
        mi = h1 + h2 - h12
        out["voi"] = h1 + h2 - 2.0 * mi
        out["nmi"] = 1.0 if (h1 + h2) == 0.0 else 2.0 * mi / (h1 + h2)

    if tp == 0:
        out["pbd"] = 0.0 if (fp + fn) == 0 else math.inf
    else:
        out["pbd"] = (fp + fn) / (2 * tp)

    # Adjusted Rand index from binomial coefficients over the table.
    if fp == 0 and fn == 0:
        out["ari"] = 1.0
    else:
        a = math.comb(tp, 2) + math.comb(fp, 2) + math.comb(fn, 2) + math.comb(tn, 2)
        b = math.comb(tp + fn, 2) + math.comb(fp + tn, 2) - a
        c = math.comb(tp + fp, 2) + math.comb(fn + tn, 2) - a
        d = math.comb(x, 2) - a - b - c
        den = (a + b) * (b + d) + (a + c) * (c + d)
        out["ari"] = None if den == 0 else 2 * (a * d - b * c) / den

    den = 2 * tp + fp + fn
    out["vs"] = None if den == 0 else 1.0 - abs(fp - fn) / den
    out["ravd"] = None if (tp + fn) == 0 else (fp - fn) / (tp + fn)
    return out


# ---------------------------------------------------------------------------
# Surface reference
# ---------------------------------------------------------------------------


def oracle_border_points(mask: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    """Border voxels by triple loop, as physical (n, 3) coordinates.

    A foreground voxel is border when any of its six face neighbours is
    background or lies outside the array. Scan order is row-major, the
    same order np.argwhere yields.
    """
    pts = []
    nx, ny, nz = mask.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if not mask[i, j, k]:
                    continue
                on_border = False
                for di, dj, dk in (
                    (-1, 0, 0),
                    (1, 0, 0),
                    (0, -1, 0),
                    (0, 1, 0),
                    (0, 0, -1),
                    (0, 0, 1),
                ):
                    a, b, c = i + di, j + dj, k + dk
                    if not (0 <= a < nx and 0 <= b < ny and 0 <= c < nz) or not mask[a, b, c]:
                        on_border = True
                        break
                if on_border:
                    pts.append((i * spacing[0], j * spacing[1], k * spacing[2]))
    return np.asarray(pts, dtype=np.float64).reshape(len(pts), 3)


def oracle_directed_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs nearest distances from rows of a to rows of b."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2)).min(axis=1)


def oracle_surface_distances(
    gt: np.ndarray, pred: np.ndarray, spacing: Sequence[float]
) -> tuple[float, float]:
    """(hd95, assd) of a mask pair by brute force."""
    bg = oracle_border_points(gt, spacing)
    bp = oracle_border_points(pred, spacing)
    d_g = oracle_directed_distances(bg, bp)
    d_p = oracle_directed_distances(bp, bg)
    pooled = np.concatenate([d_g, d_p])
    return float(np.percentile(pooled, 95)), float(np.mean(pooled))


# ---------------------------------------------------------------------------
# Component labeling reference
# ---------------------------------------------------------------------------


def _neighbour_offsets(connectivity: int) -> list[tuple[int, int, int]]:
    offsets = []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for dk in (-1, 0, 1):
                if di == dj == dk == 0:
                    continue
                manhattan = abs(di) + abs(dj) + abs(dk)
                if connectivity == 6 and manhattan > 1:
                    continue
                if connectivity == 18 and manhattan > 2:
                    continue
                offsets.append((di, dj, dk))
    return offsets


def oracle_flood_fill(mask: np.ndarray, connectivity: int) -> np.ndarray:
    """Label components by BFS flood fill, numbered in scan order."""
    offsets = _neighbour_offsets(connectivity)
    nx, ny, nz = mask.shape
    labels = np.zeros(mask.shape, dtype=np.int32)
    next_label = 0
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if not mask[i, j, k] or labels[i, j, k]:
                    continue
                next_label += 1
                queue = [(i, j, k)]
                labels[i, j, k] = next_label
                while queue:
                    ci, cj, ck = queue.pop()
                    for di, dj, dk in offsets:
                        a, b, c = ci + di, cj + dj, ck + dk
                        if (
                            0 <= a < nx
                            and 0 <= b < ny
                            and 0 <= c < nz
                            and mask[a, b, c]
                            and not labels[a, b, c]
                        ):
                            labels[a, b, c] = next_label
                            queue.append((a, b, c))
    return labels


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber labels by first occurrence in flat scan order.

    Makes labelings comparable independent of how the labeler numbered
    the components.
    """
    flat = labels.ravel()
    uniq, first = np.unique(flat, return_index=True)
    mapping = np.zeros(int(flat.max()) + 1 if flat.size else 1, dtype=np.int32)
    order = sorted((f, u) for u, f in zip(uniq, first) if u != 0)
    for new, (_, old) in enumerate(order, start=1):
        mapping[old] = new
    return mapping[labels]


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

VoxelCandidate = Callable[[int, int, int, int], Mapping[str, Optional[float]]]


def production_voxel_candidate(tp: int, tn: int, fp: int, fn: int) -> dict[str, Optional[float]]:
    return metric_set_from_counts(ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)).as_dict()


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: list[str] = field(default_factory=list)
    max_abs_dev: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def describe(self) -> str:
        status = "pass" if self.passed else "FAIL"
        line = f"{self.name}: {status} ({self.cases} cases, max |dev| {self.max_abs_dev:.3e})"
        if self.failures:
            line += f"; first failure: {self.failures[0]}"
        return line


def _compositions(total: int):
    # All (tp, tn, fp, fn) with non-negative entries summing to total.
    for tp in range(total + 1):
        for tn in range(total - tp + 1):
            for fp in range(total - tp - tn + 1):
                yield tp, tn, fp, total - tp - tn - fp


def run_confusion_suite(
    candidate: VoxelCandidate = production_voxel_candidate,
    total: int = 12,
    tol: float = 1e-9,
) -> SuiteResult:
    """Compare a voxel-metric implementation against the reference on
    every confusion composition of ``total`` voxels."""
    result = SuiteResult(name="confusion", cases=0)
    for tp, tn, fp, fn in _compositions(total):
        result.cases += 1
        expected = oracle_voxel_metrics(tp, tn, fp, fn)
        got = candidate(tp, tn, fp, fn)
        for name, want in expected.items():
            have = got.get(name)
            tag = f"tp={tp},tn={tn},fp={fp},fn={fn}: {name} expected {want!r} got {have!r}"
            if want is None or have is None:
                if want is not have:
                    result.failures.append(tag)
                continue
            if math.isinf(want) or math.isinf(have):
                if want != have:
                    result.failures.append(tag)
                continue
            dev = abs(want - have)
            result.max_abs_dev = max(result.max_abs_dev, dev)
            if dev > tol:
                result.failures.append(tag)
    return result


def _random_nonempty_mask(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    while True:
        m = rng.random(shape) < 0.5
        if m.any():
            return m


SurfaceCandidate = Callable[[np.ndarray, np.ndarray, tuple[float, float, float]], tuple[float, float]]


def production_surface_candidate(
    gt: np.ndarray, pred: np.ndarray, spacing: tuple[float, float, float]
) -> tuple[float, float]:
    bg = extract_border(BinaryMask.from_array(gt.astype(np.uint8), spacing))
    bp = extract_border(BinaryMask.from_array(pred.astype(np.uint8), spacing))
    d_g = directed_surface_distances(bg, bp)
    d_p = directed_surface_distances(bp, bg)
    return hd95(d_g, d_p), assd(d_g, d_p)


def run_surface_suite(
    candidate: SurfaceCandidate = production_surface_candidate,
    pairs: int = 1000,
    max_size: int = 6,
    seed: int = 20240311,
) -> SuiteResult:
    """Random small mask pairs with anisotropic spacing; the candidate
    must reproduce the brute-force HD95 and ASSD bit for bit."""
    rng = np.random.default_rng(seed)
    result = SuiteResult(name="surface", cases=0)
    for trial in range(pairs):
        shape = tuple(int(d) for d in rng.integers(2, max_size + 1, size=3))
        spacing = tuple(float(s) for s in rng.uniform(0.3, 3.0, size=3))
        gt = _random_nonempty_mask(rng, shape)
        pred = _random_nonempty_mask(rng, shape)
        want = oracle_surface_distances(gt, pred, spacing)
        got = candidate(gt, pred, spacing)
        result.cases += 1
        for name, w, g in zip(("hd95", "assd"), want, got):
            dev = abs(w - g)
            result.max_abs_dev = max(result.max_abs_dev, dev)
            if w != g:
                result.failures.append(
                    f"trial {trial} shape={shape} spacing={spacing}: {name} "
                    f"expected {w!r} got {g!r}"
                )
    return result


ComponentCandidate = Callable[[np.ndarray, int], np.ndarray]


def production_component_candidate(mask: np.ndarray, connectivity: int) -> np.ndarray:
    spacing = (1.0, 1.0, 1.0)
    return connected_components(
        BinaryMask.from_array(mask.astype(np.uint8), spacing), connectivity
    ).labels


def run_components_suite(
    candidate: ComponentCandidate = production_component_candidate,
    samples: int = 10_000,
    size: int = 4,
    density: float = 0.5,
    seed: int = 20240312,
    connectivities: tuple[int, ...] = (6, 26),
) -> SuiteResult:
    """Random dense masks; candidate labelings must induce the same
    partition as flood fill, and the size filter must be idempotent."""
    rng = np.random.default_rng(seed)
    result = SuiteResult(name="components", cases=0)
    for trial in range(samples):
        mask = rng.random((size, size, size)) < density
        for conn in connectivities:
            result.cases += 1
            want = canonical_labels(oracle_flood_fill(mask, conn))
            got = canonical_labels(candidate(mask, conn))
            if not np.array_equal(want, got):
                result.failures.append(
                    f"trial {trial} connectivity {conn}: partitions differ"
                )
        # Idempotence of the size filter under the default connectivity.
        labeling = connected_components(
            BinaryMask.from_array(mask.astype(np.uint8), (1.0, 1.0, 1.0)), 26
        )
        once = filter_small(labeling, min_voxels=2)
        twice = filter_small(once, min_voxels=2)
        if not (
            np.array_equal(once.labels, twice.labels)
            and once.components == twice.components
        ):
            result.failures.append(f"trial {trial}: filter_small not idempotent")
    return result


SUITE_NAMES = ("confusion", "surface", "components")


def run_selftest(
    suites: Sequence[str] = SUITE_NAMES,
    confusion_total: int = 12,
    surface_pairs: int = 200,
    component_samples: int = 2000,
    component_size: int = 5,
) -> list[SuiteResult]:
    """Run the selected oracle suites against the production code.

    An empty selection is a no-op pass (empty result list). Unknown
    suite names raise ValueError.
    """
    unknown = [s for s in suites if s not in SUITE_NAMES]
    if unknown:
        raise ValueError(f"unknown selftest suites {unknown}; choose from {SUITE_NAMES}")
    results = []
    for name in suites:
        if name == "confusion":
            results.append(run_confusion_suite(total=confusion_total))
        elif name == "surface":
            results.append(run_surface_suite(pairs=surface_pairs))
        elif name == "components":
            results.append(
                run_components_suite(samples=component_samples, size=component_size)
            )
    return results
