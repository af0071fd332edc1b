"""Scan clean-up: border artifact removal, kfill noise filtering and deskew."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .raster import BinaryImage, ParameterError, label_components, rotate

KFILL_MAX_ITERATIONS = 5


class NoContentError(ValueError):
    """Raised when an operation needs ink and the image has none."""


@dataclass(frozen=True)
class EdgeRuleSet:
    """Shape/position rules deciding which border components are scan artifacts.

    ``border_margin`` of ``None`` means 2% of the smaller page dimension.
    """

    border_margin: int | None = None
    span_fraction: float = 0.8
    elongation_ratio: float = 20.0
    elongation_span: float = 0.3

    def __post_init__(self):
        if not 0 < self.span_fraction <= 1:
            raise ParameterError(f"span_fraction must be in (0, 1], got {self.span_fraction}")
        if self.elongation_ratio <= 0 or self.elongation_span <= 0:
            raise ParameterError("elongation thresholds must be positive")
        if self.border_margin is not None and self.border_margin < 0:
            raise ParameterError("border_margin must be non-negative")

    def margin_for(self, img: BinaryImage) -> int:
        if self.border_margin is not None:
            return int(self.border_margin)
        return int(round(0.02 * min(img.width, img.height)))


@dataclass(frozen=True)
class PreprocessConfig:
    kfill_k: int = 3
    skew_range: float = 15.0
    skew_resolution: float = 0.1
    edge_rules: EdgeRuleSet = field(default_factory=EdgeRuleSet)

    def __post_init__(self):
        _check_k(self.kfill_k)
        if self.skew_range <= 0 or self.skew_resolution <= 0:
            raise ParameterError("skew_range and skew_resolution must be positive")


def _check_k(k: int) -> None:
    if k < 3 or k % 2 == 0:
        raise ParameterError(f"kfill window must be odd and >= 3, got {k}")


def edge_artifact_mask(img: BinaryImage, rules: EdgeRuleSet) -> np.ndarray:
    """Boolean mask of ink pixels belonging to border artifacts."""
    labels, stats = label_components(img.pixels)
    if len(stats) == 0:
        return np.zeros(img.pixels.shape, dtype=bool)
    w, h = img.width, img.height
    margin = rules.margin_for(img)
    x0, y0, x1, y1 = stats[:, 0], stats[:, 1], stats[:, 2], stats[:, 3]
    bw = x1 - x0 + 1
    bh = y1 - y0 + 1
    touches = (x0 <= margin) | (y0 <= margin) | (x1 >= w - 1 - margin) | (y1 >= h - 1 - margin)
    spans = (bw >= rules.span_fraction * w) | (bh >= rules.span_fraction * h)
    horiz = (bw >= rules.elongation_ratio * bh) & (bw >= rules.elongation_span * w)
    vert = (bh >= rules.elongation_ratio * bw) & (bh >= rules.elongation_span * h)
    artifact = touches & (spans | horiz | vert)
    lut = np.concatenate([[False], artifact])
    return lut[labels]


def remove_edges(img: BinaryImage, rules: EdgeRuleSet | None = None) -> BinaryImage:
    """Erase border-touching components that span the page or are strongly elongated."""
    rules = rules or EdgeRuleSet()
    mask = edge_artifact_mask(img, rules)
    if not mask.any():
        return img
    out = img.pixels.copy()
    out[mask] = 0
    return img.with_pixels(out)


def kfill(img: BinaryImage, k: int = 3) -> BinaryImage:
    """Iterated kfill over k x k windows.

    Each iteration runs a speck-removal pass (ink cores turned white) then a
    hole-filling pass (white cores turned ink); stops at a fixpoint or after
    five iterations.
    """
    _check_k(k)
    px = img.pixels
    for _ in range(KFILL_MAX_ITERATIONS):
        px, removed = kernels.kfill_pass(px, k, 0)
        px, filled = kernels.kfill_pass(px, k, 1)
        if removed == 0 and filled == 0:
            break
    return img.with_pixels(px)


def _profile_energy(xs: np.ndarray, ys: np.ndarray, angle: float, n_bins: int, offset: float) -> float:
    # row index of each ink pixel after rotating by ``angle`` (forward map of rotate())
    theta = math.radians(angle)
    rows = np.floor(-math.sin(theta) * xs + math.cos(theta) * ys + offset + 0.5).astype(np.int64)
    prof = np.bincount(rows, minlength=n_bins).astype(np.float64)
    return float(np.dot(prof, prof))


class _SkewObjective:
    """Horizontal projection-profile variance as a function of rotation angle.

    The bin range is fixed across angles, so variance is a monotone function of
    the sum of squared bin counts.
    """

    def __init__(self, img: BinaryImage):
        ys, xs = np.nonzero(img.pixels)
        if xs.size == 0:
            raise NoContentError("no content: cannot estimate skew of a blank image")
        cx, cy = (img.width - 1) / 2.0, (img.height - 1) / 2.0
        self.xs = xs.astype(np.float64) - cx
        self.ys = ys.astype(np.float64) - cy
        half_diag = math.hypot(img.width, img.height) / 2.0 + 2
        self.offset = half_diag
        self.n_bins = int(2 * half_diag) + 2
        self.total = float(xs.size)
        self._cache: dict[float, float] = {}

    def __call__(self, angle: float) -> float:
        key = round(angle, 6)
        if key not in self._cache:
            energy = _profile_energy(self.xs, self.ys, key, self.n_bins, self.offset)
            mean = self.total / self.n_bins
            self._cache[key] = energy / self.n_bins - mean * mean
        return self._cache[key]


def _grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 6) for i in range(n + 1)]


def _argmax(angles, objective) -> float:
    # ties go to the smallest |angle|, then the smaller angle
    return max(angles, key=lambda a: (objective(a), -abs(a), -a))


def estimate_skew(img: BinaryImage, config: PreprocessConfig | None = None) -> float:
    """Rotation (degrees) that deskews ``img``: pass it to :func:`rotate`.

    Maximises the variance of the horizontal projection profile with a 1 degree
    grid over +/- ``skew_range`` then a ``skew_resolution`` refinement around
    the coarse optimum.
    """
    config = config or PreprocessConfig()
    objective = _SkewObjective(img)
    rng = config.skew_range
    coarse_step = max(1.0, config.skew_resolution)
    coarse = _grid(-rng, rng, coarse_step)
    best = _argmax(coarse, objective)
    lo = max(-rng, best - coarse_step)
    hi = min(rng, best + coarse_step)
    fine = _grid(lo, hi, config.skew_resolution)
    return _argmax(fine, objective)


def skew_objective(img: BinaryImage):
    """The objective maximised by :func:`estimate_skew`, exposed for checking."""
    return _SkewObjective(img)


@dataclass(frozen=True)
class PreprocessResult:
    image: BinaryImage
    angle: float
    edges_removed: int


def preprocess_detailed(img: BinaryImage, config: PreprocessConfig | None = None) -> PreprocessResult:
    """Run the four clean-up stages and report the deskew rotation that was applied."""
    config = config or PreprocessConfig()
    stage = remove_edges(img, config.edge_rules)
    edges_removed = img.ink - stage.ink
    stage = kfill(stage, config.kfill_k)
    angle = 0.0
    if stage.ink:
        angle = estimate_skew(stage, config)
        if angle != 0.0:
            stage = rotate(stage, angle)
        stage = kfill(stage, config.kfill_k)
    return PreprocessResult(stage, angle, edges_removed)


def preprocess(img: BinaryImage, config: PreprocessConfig | None = None) -> BinaryImage:
    """remove_edges -> kfill -> deskew -> kfill."""
    return preprocess_detailed(img, config).image
