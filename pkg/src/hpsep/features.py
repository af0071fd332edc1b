"""Fixed 35-slot pseudo-word descriptor and z-score normalization.

Slot layout (version ``LAYOUT_VERSION``):

====== ==========================================================
0-4    height, width, aspect w/h, ink count, density
5-15   CC count; mean/std CC width, height, aspect, density;
       mean/std inter-CC gap
16-22  Hu invariants (signed-log compressed)
23-24  normalized variance of horizontal / vertical projections
25-28  mean/std horizontal black runs, mean/std vertical runs
29-30  mean crossings per row, per column
31-34  P(black | black) at offsets (1,0), (0,1), (1,1), (1,-1)
====== ==========================================================
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .segment import PseudoWord, component_gaps

LAYOUT_VERSION = "hpsep-features-v1"
N_FEATURES = 35

FEATURE_NAMES = (
    "height", "width", "aspect", "ink", "density",
    "cc_count", "cc_width_mean", "cc_width_std", "cc_height_mean", "cc_height_std",
    "cc_aspect_mean", "cc_aspect_std", "cc_density_mean", "cc_density_std",
    "cc_gap_mean", "cc_gap_std",
    "hu1", "hu2", "hu3", "hu4", "hu5", "hu6", "hu7",
    "hproj_var", "vproj_var",
    "hrun_mean", "hrun_std", "vrun_mean", "vrun_std",
    "row_crossings", "col_crossings",
    "cooc_1_0", "cooc_0_1", "cooc_1_1", "cooc_1_m1",
)
assert len(FEATURE_NAMES) == N_FEATURES


class EmptyMaskError(ValueError):
    pass


def _signed_log(v: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.log10(1.0 + np.abs(v))


def _pixel_power_integrals(offsets: np.ndarray, max_order: int) -> list[np.ndarray]:
    """Integral of u**p over [a-1/2, a+1/2] for each offset a and p = 0..max_order."""
    hi = offsets + 0.5
    lo = offsets - 0.5
    out = []
    hi_pow = hi.copy()
    lo_pow = lo.copy()
    for p in range(max_order + 1):
        out.append((hi_pow - lo_pow) / (p + 1))
        hi_pow = hi_pow * hi
        lo_pow = lo_pow * lo
    return out


def central_moments(mask: np.ndarray) -> dict[tuple[int, int], float]:
    """Central moments up to order 3 of the mask read as unit pixel squares.

    Integrating over pixel areas (rather than treating pixels as points) makes
    integer up-scaling an exact similarity transform of the shape.
    """
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptyMaskError("moments of an empty mask")
    n = float(xs.size)
    cx = xs.mean()
    cy = ys.mean()
    ix = _pixel_power_integrals(xs - cx, 3)
    iy = _pixel_power_integrals(ys - cy, 3)
    mu = {}
    for p in range(4):
        for q in range(4 - p):
            mu[(p, q)] = float(np.dot(ix[p], iy[q]))
    mu[(0, 0)] = n
    mu[(1, 0)] = 0.0
    mu[(0, 1)] = 0.0
    return mu


def hu_moments(mask: np.ndarray, compress: bool = True) -> np.ndarray:
    """Seven Hu invariants, signed-log compressed by default."""
    mu = central_moments(np.asarray(mask, dtype=bool))
    m00 = mu[(0, 0)]

    def eta(p, q):
        return mu[(p, q)] / m00 ** (1 + (p + q) / 2.0)

    n20, n02, n11 = eta(2, 0), eta(0, 2), eta(1, 1)
    n30, n03, n21, n12 = eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2)
    a = n30 + n12
    b = n21 + n03
    hu = np.array([
        n20 + n02,
        (n20 - n02) ** 2 + 4 * n11 ** 2,
        (n30 - 3 * n12) ** 2 + (3 * n21 - n03) ** 2,
        a ** 2 + b ** 2,
        (n30 - 3 * n12) * a * (a ** 2 - 3 * b ** 2) + (3 * n21 - n03) * b * (3 * a ** 2 - b ** 2),
        (n20 - n02) * (a ** 2 - b ** 2) + 4 * n11 * a * b,
        (3 * n21 - n03) * a * (a ** 2 - 3 * b ** 2) - (n30 - 3 * n12) * b * (3 * a ** 2 - b ** 2),
    ])
    return _signed_log(hu) if compress else hu


def _runs_along_rows(mask: np.ndarray) -> np.ndarray:
    """Lengths of maximal black runs in each row."""
    padded = np.zeros((mask.shape[0], mask.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    d = np.diff(padded, axis=1)
    starts = np.nonzero(d.ravel() == 1)[0]
    ends = np.nonzero(d.ravel() == -1)[0]
    return ends - starts


def run_length_stats(mask: np.ndarray) -> np.ndarray:
    """(mean, std) of horizontal then vertical black run lengths."""
    mask = np.atleast_2d(np.asarray(mask, dtype=bool))
    h = _runs_along_rows(mask)
    v = _runs_along_rows(mask.T)
    if h.size == 0:
        return np.zeros(4)
    return np.array([h.mean(), h.std(), v.mean(), v.std()], dtype=np.float64)


def crossing_counts(mask: np.ndarray) -> np.ndarray:
    """Mean white-to-black transitions per row and per column (border counts as white)."""
    mask = np.atleast_2d(np.asarray(mask, dtype=np.int8))
    rows = np.count_nonzero(np.diff(np.pad(mask, ((0, 0), (1, 0))), axis=1) == 1) / mask.shape[0]
    cols = np.count_nonzero(np.diff(np.pad(mask, ((1, 0), (0, 0))), axis=0) == 1) / mask.shape[1]
    return np.array([rows, cols], dtype=np.float64)


COOCCURRENCE_OFFSETS = ((1, 0), (0, 1), (1, 1), (1, -1))  # (dx, dy)


def cooccurrence(mask: np.ndarray) -> np.ndarray:
    """Fraction of black-anchored pixel pairs whose partner is also black, per offset."""
    mask = np.atleast_2d(np.asarray(mask, dtype=bool))
    h, w = mask.shape
    out = np.zeros(4)
    for t, (dx, dy) in enumerate(COOCCURRENCE_OFFSETS):
        ys = slice(0, h - dy) if dy >= 0 else slice(-dy, h)
        yd = slice(dy, h) if dy >= 0 else slice(0, h + dy)
        a = mask[ys, 0:w - dx]
        b = mask[yd, dx:w]
        anchors = np.count_nonzero(a)
        if anchors:
            out[t] = np.count_nonzero(a & b) / anchors
    return out


def _projection_variance(mask: np.ndarray, axis: int) -> float:
    prof = mask.sum(axis=axis).astype(np.float64)
    mean = prof.mean()
    return float(prof.var() / (mean * mean)) if mean > 0 else 0.0


def _mean_std(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size <= 1:
        return (float(arr[0]) if arr.size else 0.0), 0.0
    return float(arr.mean()), float(arr.std())


def extract_features(word: PseudoWord) -> np.ndarray:
    """The 35-slot descriptor of ``word`` (see module docstring for the layout)."""
    mask = word.mask()
    f = np.zeros(N_FEATURES)
    h, w = mask.shape
    ink = int(word.pixel_count)
    f[0:5] = (h, w, w / h, ink, ink / (w * h))

    ccs = word.components
    cw = [c.bbox.width for c in ccs]
    ch = [c.bbox.height for c in ccs]
    ca = [c.bbox.width / c.bbox.height for c in ccs]
    cd = [c.pixel_count / (c.bbox.width * c.bbox.height) for c in ccs]
    f[5] = len(ccs)
    f[6:8] = _mean_std(cw)
    f[8:10] = _mean_std(ch)
    f[10:12] = _mean_std(ca)
    f[12:14] = _mean_std(cd)
    gaps = component_gaps(sorted(ccs, key=lambda c: c.bbox.x_min))
    f[14:16] = _mean_std(gaps) if gaps else (0.0, 0.0)

    f[16:23] = hu_moments(mask)
    f[23] = _projection_variance(mask, 1)
    f[24] = _projection_variance(mask, 0)
    f[25:29] = run_length_stats(mask)
    f[29:31] = crossing_counts(mask)
    f[31:35] = cooccurrence(mask)
    return f


def extract_all(words) -> np.ndarray:
    if not words:
        return np.zeros((0, N_FEATURES))
    return np.vstack([extract_features(w) for w in words])


@dataclass(frozen=True, eq=False)
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return apply_normalization(vectors, self)


def fit_normalization(vectors) -> NormalizationStats:
    arr = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if arr.shape[0] < 2:
        raise ValueError("normalization needs at least two training vectors")
    return NormalizationStats(arr.mean(axis=0), arr.std(axis=0))


def apply_normalization(vectors, stats: NormalizationStats) -> np.ndarray:
    """Per-slot z-score; zero-variance slots are only centered."""
    arr = np.asarray(vectors, dtype=np.float64)
    scale = np.where(stats.std > 0, stats.std, 1.0)
    return (arr - stats.mean) / scale


def invert_normalization(vectors, stats: NormalizationStats) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    scale = np.where(stats.std > 0, stats.std, 1.0)
    return arr * scale + stats.mean
