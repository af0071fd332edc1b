"""Pixel-level recognition rates and the grouping-method comparison table."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .raster import BinaryImage, rotation_source_map
from .svm import CLASSES, LabelClass

BACKGROUND = 0


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreReport:
    """Per-class and pooled recognition rates over ground-truth ink pixels."""

    correct: tuple[int, int, int]
    used: tuple[int, int, int]

    @property
    def rates(self) -> tuple[float, float, float]:
        return tuple(c / u if u else float("nan") for c, u in zip(self.correct, self.used))

    @property
    def average(self) -> float:
        total = sum(self.used)
        return sum(self.correct) / total if total else float("nan")

    def rate_of(self, cls: LabelClass) -> float:
        return self.rates[CLASSES.index(cls)]

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        return ScoreReport(tuple(a + b for a, b in zip(self.correct, other.correct)),
                           tuple(a + b for a, b in zip(self.used, other.used)))

    @classmethod
    def empty(cls) -> "ScoreReport":
        return cls((0, 0, 0), (0, 0, 0))


def rate(predicted: np.ndarray, truth: np.ndarray) -> ScoreReport:
    """Correctly labelled ink pixels over ink pixels used, per class and pooled.

    Pixels whose truth is background are not used.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise DimensionMismatchError(f"raster shapes differ: {predicted.shape} vs {truth.shape}")
    used_counts = np.bincount(truth.ravel(), minlength=4)
    hit = truth[(predicted == truth) & (truth != BACKGROUND)]
    correct_counts = np.bincount(hit, minlength=4)
    return ScoreReport(tuple(int(correct_counts[c]) for c in CLASSES),
                       tuple(int(used_counts[c]) for c in CLASSES))


def project_labels(words, image: BinaryImage) -> np.ndarray:
    """Label raster: ink pixels take their word's label, unclaimed ink is Noise."""
    out = np.zeros(image.pixels.shape, dtype=np.uint8)
    out[image.pixels > 0] = int(LabelClass.NOISE)
    for lw in words:
        val = int(lw.label)
        for cc in lw.word.components:
            sl = cc.bbox.slices
            out[sl][cc.pixel_mask] = val
    return out


def backproject_labels(labels: np.ndarray, angle: float, source: BinaryImage) -> np.ndarray:
    """Carry a label raster from the deskewed frame back onto the ink of ``source``.

    Every deskewed pixel was sampled from one source pixel; labels follow that
    link backwards. Source ink that no labelled pixel points to takes the
    first non-zero label in its 3x3 neighbourhood, or Noise when there is
    none (ink discarded by the clean-up stages).
    """
    h, w = source.pixels.shape
    if labels.shape != (h, w):
        raise DimensionMismatchError(f"raster shapes differ: {labels.shape} vs {(h, w)}")
    out = np.zeros((h, w), dtype=np.uint8)
    if angle == 0:
        out[:] = labels
    else:
        sx, sy, valid = rotation_source_map(w, h, angle)
        sel = valid & (labels > 0)
        out[sy[sel], sx[sel]] = labels[sel]
    ink = source.pixels > 0
    out[~ink] = 0
    missing = ink & (out == 0)
    if missing.any():
        padded = np.zeros((h + 2, w + 2), dtype=np.uint8)
        padded[1:-1, 1:-1] = out
        ys, xs = np.nonzero(missing)
        fill = np.zeros(ys.size, dtype=np.uint8)
        for dy in (0, -1, 1):
            for dx in (0, -1, 1):
                cand = padded[ys + 1 + dy, xs + 1 + dx]
                take = (fill == 0) & (cand > 0)
                fill[take] = cand[take]
        fill[fill == 0] = int(LabelClass.NOISE)
        out[ys, xs] = fill
    return out


# ---------------------------------------------------------------------------
# comparison table

TABLE_ROWS = (
    ("none", "Double smearing"),
    ("knn", "k-NN"),
    ("knn-constrained", "k-NN with constraints"),
    ("conf-gauss", "Gaussian confidence"),
    ("conf-poly2", "Poly2 confidence"),
    ("conf-poly4", "Poly4 confidence"),
)


def format_table(reports: dict[str, ScoreReport]) -> str:
    """Aligned text table: one row per method, rates in percent."""
    head = f"{'Recognition rate':<24}{'Hand.':>8}{'Print.':>8}{'Noise':>8}{'Average':>9}"
    lines = [head, "-" * len(head)]
    for key, title in TABLE_ROWS:
        if key not in reports:
            continue
        r = reports[key]
        h, p, n = (100 * v for v in r.rates)
        lines.append(f"{title:<24}{h:>8.2f}{p:>8.2f}{n:>8.2f}{100 * r.average:>9.2f}")
    return "\n".join(lines) + "\n"


def format_csv(reports: dict[str, ScoreReport]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["method", "hand", "print", "noise", "average",
                 "hand_pixels", "print_pixels", "noise_pixels"])
    for key, _ in TABLE_ROWS:
        if key not in reports:
            continue
        r = reports[key]
        wr.writerow([key, *(f"{v:.6f}" for v in r.rates), f"{r.average:.6f}", *r.used])
    return buf.getvalue()
