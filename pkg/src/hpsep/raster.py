"""Binary raster type, connected components, rotation and projections."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

EIGHT = np.ones((3, 3), dtype=bool)
FOUR = ndimage.generate_binary_structure(2, 1)
MAX_ROTATION = 90.0


class ParameterError(ValueError):
    """An operation was called with an out-of-range parameter."""


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Bilevel raster, 1 = ink. ``pixels`` is a read-only (height, width) uint8 array."""

    pixels: np.ndarray
    dpi: int = 300

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.uint8, copy=True)
        if px.ndim != 2 or px.shape[0] == 0 or px.shape[1] == 0:
            raise ParameterError(f"image must be a non-empty 2-D raster, got shape {px.shape}")
        if px.max(initial=0) > 1:
            px = (px > 0).astype(np.uint8)
        if int(self.dpi) <= 0:
            raise ParameterError(f"dpi must be positive, got {self.dpi}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "dpi", int(self.dpi))

    @classmethod
    def blank(cls, width: int, height: int, dpi: int = 300) -> "BinaryImage":
        return cls(np.zeros((height, width), dtype=np.uint8), dpi)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def ink(self) -> int:
        return int(np.count_nonzero(self.pixels))

    def with_pixels(self, pixels: np.ndarray) -> "BinaryImage":
        return BinaryImage(pixels, self.dpi)

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return self.dpi == other.dpi and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive pixel box."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ParameterError(f"inverted bounding box {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y_min, self.y_max + 1), slice(self.x_min, self.x_max + 1)

    def union(self, other: "BoundingBox") -> "BoundingBox":
        return BoundingBox(min(self.x_min, other.x_min), min(self.y_min, other.y_min),
                           max(self.x_max, other.x_max), max(self.y_max, other.y_max))

    @staticmethod
    def union_all(boxes) -> "BoundingBox":
        boxes = list(boxes)
        return BoundingBox(min(b.x_min for b in boxes), min(b.y_min for b in boxes),
                           max(b.x_max for b in boxes), max(b.y_max for b in boxes))


@dataclass(frozen=True, eq=False)
class ConnectedComponent:
    bbox: BoundingBox
    pixel_count: int
    centroid: tuple[float, float]
    pixel_mask: np.ndarray = field(repr=False)

    def pixel_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Absolute (ys, xs) of the component's ink pixels."""
        ys, xs = np.nonzero(self.pixel_mask)
        return ys + self.bbox.y_min, xs + self.bbox.x_min


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 8:
        return EIGHT
    if connectivity == 4:
        return FOUR
    raise ParameterError(f"connectivity must be 4 or 8, got {connectivity}")


def label_components(pixels: np.ndarray, connectivity: int = 8):
    """Label ink components.

    Returns ``(labels, stats)`` where ``labels`` numbers components 1..n in the
    canonical (y_min, x_min) order and ``stats`` is an (n, 7) int64 array of
    ``x_min, y_min, x_max, y_max, count, sum_x, sum_y``.
    """
    raw, n = ndimage.label(pixels, structure=_structure(connectivity))
    if n == 0:
        return raw.astype(np.int32), np.zeros((0, 7), dtype=np.int64)
    ys, xs = np.nonzero(raw)
    lab = raw[ys, xs]
    stats = np.zeros((n + 1, 7), dtype=np.int64)
    stats[:, 0] = np.iinfo(np.int64).max
    stats[:, 1] = np.iinfo(np.int64).max
    np.minimum.at(stats[:, 0], lab, xs)
    np.minimum.at(stats[:, 1], lab, ys)
    np.maximum.at(stats[:, 2], lab, xs)
    np.maximum.at(stats[:, 3], lab, ys)
    stats[:, 4] = np.bincount(lab, minlength=n + 1)
    stats[:, 5] = np.bincount(lab, weights=xs, minlength=n + 1).astype(np.int64)
    stats[:, 6] = np.bincount(lab, weights=ys, minlength=n + 1).astype(np.int64)
    stats = stats[1:]
    order = np.lexsort((np.arange(n), stats[:, 0], stats[:, 1]))
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return remap[raw], stats[order]


def components_from_labels(labels: np.ndarray, stats: np.ndarray) -> list[ConnectedComponent]:
    out = []
    for i, (x0, y0, x1, y1, cnt, sx, sy) in enumerate(stats.tolist(), start=1):
        mask = labels[y0:y1 + 1, x0:x1 + 1] == i
        mask.setflags(write=False)
        out.append(ConnectedComponent(BoundingBox(x0, y0, x1, y1), cnt, (sx / cnt, sy / cnt), mask))
    return out


def connected_components(img: BinaryImage, connectivity: int = 8) -> list[ConnectedComponent]:
    """Ink components ordered by ascending (y_min, x_min)."""
    labels, stats = label_components(img.pixels, connectivity)
    return components_from_labels(labels, stats)


def _rotation_source(width: int, height: int, angle: float):
    """Nearest-neighbour source coordinates for every output pixel."""
    theta = math.radians(angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    dy, dx = np.mgrid[0:height, 0:width].astype(np.float64)
    dx -= cx
    dy -= cy
    sx = np.floor(cx + cos_t * dx - sin_t * dy + 0.5).astype(np.int64)
    sy = np.floor(cy + sin_t * dx + cos_t * dy + 0.5).astype(np.int64)
    return sx, sy


def rotate_raster(raster: np.ndarray, angle: float) -> np.ndarray:
    """Rotate any 2-D raster (binary or label map) about its center.

    Positive angles turn the content counter-clockwise as displayed. Uses
    inverse mapping with nearest-neighbour sampling; out-of-frame is 0.
    """
    if not -MAX_ROTATION <= angle <= MAX_ROTATION:
        raise ParameterError(f"rotation angle must be within +/-{MAX_ROTATION:g} degrees, got {angle}")
    if angle == 0:
        return np.array(raster, copy=True)
    h, w = raster.shape
    sx, sy = _rotation_source(w, h, angle)
    valid = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    out = np.zeros_like(raster)
    out[valid] = raster[sy[valid], sx[valid]]
    return out


def rotate(img: BinaryImage, angle: float) -> BinaryImage:
    """Rotate ``img`` by ``angle`` degrees keeping its dimensions."""
    return img.with_pixels(rotate_raster(img.pixels, angle))


def rotation_source_map(width: int, height: int, angle: float):
    """Source pixel of each output pixel under :func:`rotate`, as (sx, sy, valid)."""
    sx, sy = _rotation_source(width, height, angle)
    valid = (sx >= 0) & (sx < width) & (sy >= 0) & (sy < height)
    return sx, sy, valid


def projection_profile(img: BinaryImage, axis: str = "horizontal") -> np.ndarray:
    """Ink counts per row (``horizontal``) or per column (``vertical``)."""
    if axis == "horizontal":
        return img.pixels.sum(axis=1, dtype=np.int64)
    if axis == "vertical":
        return img.pixels.sum(axis=0, dtype=np.int64)
    raise ParameterError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")
