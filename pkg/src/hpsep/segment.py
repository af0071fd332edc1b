"""Pseudo-line and pseudo-word segmentation by double smearing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .raster import (BinaryImage, BoundingBox, ConnectedComponent, ParameterError,
                     components_from_labels, label_components)

LINE_FACTOR = 3.0
LINE_THRESHOLD_RANGE = (10, 500)  # pixels at 300 dpi


class DegenerateLineError(ValueError):
    """The gap histogram of a line carries no usable gaps."""


@dataclass(frozen=True, eq=False)
class PseudoLine:
    bbox: BoundingBox
    components: tuple[ConnectedComponent, ...]
    line_id: int = 0


@dataclass(frozen=True, eq=False)
class PseudoWord:
    id: int
    line_id: int
    bbox: BoundingBox
    components: tuple[ConnectedComponent, ...]
    pixel_count: int

    def mask(self) -> np.ndarray:
        """Ink mask of the word in its own bounding-box frame."""
        out = np.zeros((self.bbox.height, self.bbox.width), dtype=bool)
        for cc in self.components:
            y0 = cc.bbox.y_min - self.bbox.y_min
            x0 = cc.bbox.x_min - self.bbox.x_min
            out[y0:y0 + cc.bbox.height, x0:x0 + cc.bbox.width] |= cc.pixel_mask
        return out

    @property
    def centroid(self) -> tuple[float, float]:
        """Ink center of gravity."""
        sx = sum(cc.centroid[0] * cc.pixel_count for cc in self.components)
        sy = sum(cc.centroid[1] * cc.pixel_count for cc in self.components)
        return sx / self.pixel_count, sy / self.pixel_count


@dataclass(frozen=True)
class GapHistogram:
    counts: tuple[int, ...]
    paired_bins: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("histogram counts must be non-negative")
        object.__setattr__(self, "paired_bins", pair_bins(self.counts))


def pair_bins(counts) -> tuple[int, ...]:
    """Width-2 bins starting at gap 2: bin b = counts[2+2b] + counts[3+2b]."""
    counts = list(counts)
    n = max(0, (len(counts) - 2 + 1) // 2)
    return tuple(counts[2 + 2 * b] + (counts[3 + 2 * b] if 3 + 2 * b < len(counts) else 0)
                 for b in range(n))


# ---------------------------------------------------------------------------
# smearing

def rlsa_horizontal(img: BinaryImage, threshold: int) -> BinaryImage:
    """Fill horizontal white runs of length <= threshold bounded by ink on both sides."""
    if threshold < 0:
        raise ParameterError(f"threshold must be >= 0, got {threshold}")
    return img.with_pixels(kernels.rlsa_rows(img.pixels, int(threshold)))


def rlsa_vertical(img: BinaryImage, threshold: int) -> BinaryImage:
    if threshold < 0:
        raise ParameterError(f"threshold must be >= 0, got {threshold}")
    out = kernels.rlsa_rows(np.ascontiguousarray(img.pixels.T), int(threshold))
    return img.with_pixels(out.T)


def classical_rlsa(img: BinaryImage, h_threshold: int, v_threshold: int) -> BinaryImage:
    """Bitwise AND of the horizontal and the vertical smear of ``img``."""
    h = rlsa_horizontal(img, h_threshold).pixels
    v = rlsa_vertical(img, v_threshold).pixels
    return img.with_pixels(h & v)


# ---------------------------------------------------------------------------
# lines

def line_threshold(components, dpi: int = 300, factor: float = LINE_FACTOR) -> int:
    """First-smear threshold: ``factor`` x median component height, clamped."""
    scale = dpi / 300.0
    lo, hi = LINE_THRESHOLD_RANGE[0] * scale, LINE_THRESHOLD_RANGE[1] * scale
    if len(components) == 0:
        return int(round(lo))
    heights = [cc.bbox.height for cc in components]
    value = factor * float(np.median(heights))
    return int(round(min(max(value, lo), hi)))


def _lines_from(img: BinaryImage, labels, stats, factor: float) -> list[PseudoLine]:
    comps = components_from_labels(labels, stats)
    if not comps:
        return []
    thr = line_threshold(comps, img.dpi, factor)
    smeared = kernels.rlsa_rows(img.pixels, thr)
    line_labels, _ = label_components(smeared)
    # a component lies inside exactly one smeared region
    owner = line_labels[stats[:, 1], _first_x(labels, stats)]
    groups: dict[int, list[ConnectedComponent]] = {}
    for cc, lab in zip(comps, owner.tolist()):
        groups.setdefault(lab, []).append(cc)
    lines = []
    for members in groups.values():
        members.sort(key=lambda c: (c.bbox.x_min, c.bbox.y_min, c.bbox.x_max, c.bbox.y_max))
        lines.append(PseudoLine(BoundingBox.union_all(c.bbox for c in members), tuple(members)))
    lines.sort(key=lambda ln: (ln.bbox.y_min, ln.bbox.x_min))
    return [PseudoLine(ln.bbox, ln.components, i) for i, ln in enumerate(lines)]


def _first_x(labels, stats) -> np.ndarray:
    """x of the first ink pixel on the top row of every component."""
    xs = np.empty(len(stats), dtype=np.int64)
    for i, (x0, y0, x1) in enumerate(stats[:, :3].tolist()):
        row = labels[y0, x0:x1 + 1]
        xs[i] = x0 + int(np.argmax(row == i + 1))
    return xs


def extract_lines(img: BinaryImage, factor: float = LINE_FACTOR) -> list[PseudoLine]:
    """Pseudo-lines, top to bottom, each with its components in x order."""
    labels, stats = label_components(img.pixels)
    return _lines_from(img, labels, stats, factor)


# ---------------------------------------------------------------------------
# gaps and threshold

def component_gaps(components) -> list[int]:
    """Horizontal gap of each component (after the first, in x order) to its predecessors.

    The gap is measured to the nearest preceding bounding box, i.e. to the
    running maximum of ``x_max``, and floored at 0.
    """
    gaps = []
    reach = None
    for cc in components:
        if reach is not None:
            gaps.append(max(0, cc.bbox.x_min - reach - 1))
            reach = max(reach, cc.bbox.x_max)
        else:
            reach = cc.bbox.x_max
    return gaps


def histogram_of(gaps) -> GapHistogram:
    if not gaps:
        return GapHistogram(())
    return GapHistogram(tuple(np.bincount(np.asarray(gaps, dtype=np.int64)).tolist()))


def gap_histogram(line: PseudoLine) -> GapHistogram:
    return histogram_of(component_gaps(line.components))


def word_gap_threshold(hist: GapHistogram) -> int:
    """Valley threshold d_hs in pixels separating intra- from inter-word gaps.

    Starting at the first peak of the paired bins, walk right until a bin
    exceeds its predecessor; the exit index ``i`` gives ``i + 2``. When the
    walk runs off the end the upper edge of the peak bin is used instead.
    """
    bins = hist.paired_bins
    if not bins or max(bins) == 0:
        raise DegenerateLineError("degenerate line: no gaps of 2 px or more")
    peak = int(np.argmax(bins))
    i = peak
    while True:
        previous = bins[i]
        i += 1
        if i >= len(bins):
            return 2 * peak + 3
        if bins[i] > previous:
            return i + 2


def split_line(components, d_hs: int | None) -> list[list[ConnectedComponent]]:
    """Group consecutive components whose gap is <= d_hs; None means one word per component."""
    groups: list[list[ConnectedComponent]] = []
    gaps = component_gaps(components)
    for idx, cc in enumerate(components):
        if idx == 0 or d_hs is None or gaps[idx - 1] > d_hs:
            groups.append([cc])
        else:
            groups[-1].append(cc)
    return groups


def line_word_threshold(line: PseudoLine) -> int | None:
    if len(line.components) < 2:
        return None
    try:
        return word_gap_threshold(gap_histogram(line))
    except DegenerateLineError:
        return None


def words_from_lines(lines) -> list[PseudoWord]:
    words: list[PseudoWord] = []
    for line in lines:
        d_hs = line_word_threshold(line)
        for group in split_line(line.components, d_hs):
            words.append(PseudoWord(
                id=len(words),
                line_id=line.line_id,
                bbox=BoundingBox.union_all(c.bbox for c in group),
                components=tuple(group),
                pixel_count=sum(c.pixel_count for c in group),
            ))
    return words


def segment_words(img: BinaryImage, factor: float = LINE_FACTOR) -> list[PseudoWord]:
    """Pseudo-words of a preprocessed page, ids in line then x order."""
    return words_from_lines(extract_lines(img, factor))


@dataclass(frozen=True, eq=False)
class Segmentation:
    lines: list[PseudoLine]
    words: list[PseudoWord]


def segment_page(img: BinaryImage, factor: float = LINE_FACTOR) -> Segmentation:
    lines = extract_lines(img, factor)
    return Segmentation(lines, words_from_lines(lines))


def classical_blocks(img: BinaryImage, h_threshold: int, v_threshold: int) -> int:
    """Number of blocks produced by the classical RLSA on ``img``."""
    _, stats = label_components(classical_rlsa(img, h_threshold, v_threshold).pixels)
    return len(stats)
