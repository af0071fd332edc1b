"""Contextual relabeling of pseudo-words from their spatial neighbours.

Three strategies are provided: plain k-NN majority, k-NN majority with an
ink-area constraint, and nearest-neighbour confidence voting under a
distance-weighting law. All of them compute every decision from the input
labels and then apply the changes at once, so results never depend on word
order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .kdtree import CENTROID, METRICS, KdTree, build_tree
from .raster import BoundingBox
from .segment import PseudoWord
from .svm import CLASSES, LabelClass

DEFAULT_K = 2
MAX_DIST_300DPI = {"centroid": 300.0, "bbox": 100.0}
AREA_FRACTION = 0.5


@dataclass(frozen=True)
class DistanceWeights:
    w_x: float = 1.0
    w_y: float = 3.0

    def __post_init__(self):
        if not (self.w_x > 0 and self.w_y > 0):
            raise ValueError(f"distance weights must be positive: {self}")


@dataclass(frozen=True, eq=False)
class LabeledWord:
    word: PseudoWord
    label: LabelClass
    confidence: float
    centroid: tuple[float, float]

    def __post_init__(self):
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in (0, 1], got {self.confidence}")
        object.__setattr__(self, "label", LabelClass(self.label))

    @property
    def id(self) -> int:
        return self.word.id

    @property
    def area(self) -> int:
        return self.word.pixel_count

    @classmethod
    def from_word(cls, word: PseudoWord, label, confidence: float) -> "LabeledWord":
        return cls(word, LabelClass(label), confidence, word.centroid)


def default_max_dist(metric: str = "centroid", dpi: int = 300) -> float:
    """Neighbour cut-off for ``metric``, scaled linearly from its 300 dpi value."""
    return MAX_DIST_300DPI[metric] * dpi / 300.0


# ---------------------------------------------------------------------------
# distances

def weighted_distance(a: LabeledWord, b: LabeledWord, w: DistanceWeights = DistanceWeights()) -> float:
    """Centroid distance with per-axis weights."""
    dx = a.centroid[0] - b.centroid[0]
    dy = a.centroid[1] - b.centroid[1]
    return math.sqrt((dx * dx) * (w.w_x * w.w_x) + (dy * dy) * (w.w_y * w.w_y))


def _box(obj) -> BoundingBox:
    if isinstance(obj, BoundingBox):
        return obj
    if isinstance(obj, LabeledWord):
        return obj.word.bbox
    return obj.bbox


def bbox_distance(a, b) -> float:
    """Euclidean combination of the per-axis edge gaps; 0 for touching or overlapping boxes."""
    a, b = _box(a), _box(b)
    gx = max(0.0, float(b.x_min - a.x_max - 1), float(a.x_min - b.x_max - 1))
    gy = max(0.0, float(b.y_min - a.y_max - 1), float(a.y_min - b.y_max - 1))
    return math.sqrt(gx * gx + gy * gy)


# ---------------------------------------------------------------------------
# index

def _extents(words, metric: int) -> np.ndarray:
    out = np.empty((len(words), 4))
    for i, lw in enumerate(words):
        if metric == CENTROID:
            x, y = lw.centroid
            out[i] = (x, x, y, y)
        else:
            b = lw.word.bbox
            out[i] = (b.x_min, b.x_max, b.y_min, b.y_max)
    return out


@dataclass(frozen=True, eq=False)
class SpatialIndex:
    words: tuple[LabeledWord, ...]
    tree: KdTree
    weights: DistanceWeights
    metric: str

    def __len__(self):
        return len(self.words)

    def neighbours_of_all(self, k: int, max_dist: float):
        """(idx, dist) arrays of shape (n, k) for every indexed word, self excluded."""
        return self.tree.query(self.tree.items, self.tree.ids, k, max_dist)


def build_index(words, w: DistanceWeights = DistanceWeights(), metric: str = "centroid",
                leaf_size: int = 8) -> SpatialIndex:
    """kd-tree over the words under the weighted-centroid or bounding-box metric."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {sorted(METRICS)}, got {metric!r}")
    words = tuple(words)
    ids = np.array([lw.id for lw in words], dtype=np.int64)
    if len(np.unique(ids)) != len(ids):
        raise ValueError("word ids must be unique")
    code = METRICS[metric]
    wx, wy = (w.w_x, w.w_y) if code == CENTROID else (1.0, 1.0)
    tree = build_tree(_extents(words, code), ids, code, wx, wy, leaf_size)
    return SpatialIndex(words, tree, w, metric)


def knn(index: SpatialIndex, word: LabeledWord, k: int = DEFAULT_K,
        max_dist: float | None = None) -> list[tuple[LabeledWord, float]]:
    """Up to k nearest other words within ``max_dist``, by ascending (distance, id)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_dist is None:
        max_dist = default_max_dist(index.metric)
    q = _extents([word], METRICS[index.metric])
    idx, dist = index.tree.query(q, np.array([word.id]), k, max_dist)
    return [(index.words[j], float(d)) for j, d in zip(idx[0], dist[0]) if j >= 0]


def _check_index(words, index: SpatialIndex):
    if len(words) != len(index.words) or any(a.id != b.id for a, b in zip(words, index.words)):
        raise ValueError("index was built over a different word list")


# ---------------------------------------------------------------------------
# strategies

def _majority(neigh_labels: np.ndarray):
    """Label held by a strict majority of the found neighbours, or None."""
    n = len(neigh_labels)
    if n == 0:
        return None
    for cls in CLASSES:
        if np.count_nonzero(neigh_labels == int(cls)) > n / 2:
            return cls
    return None


def _decide_knn(words, index, k, max_dist, constrained: bool) -> list[LabelClass]:
    _check_index(words, index)
    idx, _ = index.neighbours_of_all(k, max_dist)
    labels = np.array([int(w.label) for w in words], dtype=np.int64)
    areas = np.array([w.area for w in words], dtype=np.float64)
    out = []
    for i, w in enumerate(words):
        found = idx[i][idx[i] >= 0]
        cls = _majority(labels[found])
        new = w.label
        if cls is not None and cls != w.label:
            if not constrained:
                new = cls
            else:
                support = areas[found[labels[found] == int(cls)]].sum()
                if support >= AREA_FRACTION * areas[i]:
                    new = cls
        out.append(new)
    return out


def _apply(words, new_labels) -> list[LabeledWord]:
    return [w if w.label == lab else replace(w, label=lab) for w, lab in zip(words, new_labels)]


def regroup_knn(words, index: SpatialIndex, k: int = DEFAULT_K, max_dist: float | None = None):
    """Adopt the label of a strict majority of the k nearest neighbours."""
    if max_dist is None:
        max_dist = default_max_dist(index.metric)
    return _apply(words, _decide_knn(words, index, k, max_dist, constrained=False))


def regroup_constrained(words, index: SpatialIndex, k: int = DEFAULT_K, max_dist: float | None = None):
    """k-NN majority, applied only if the majority neighbours carry at least half the word's ink."""
    if max_dist is None:
        max_dist = default_max_dist(index.metric)
    return _apply(words, _decide_knn(words, index, k, max_dist, constrained=True))


def _check_conf(conf: float) -> None:
    if conf == 0:
        raise ZeroDivisionError("confidence must be non-zero")


def f_gauss(conf: float, dist: float) -> float:
    _check_conf(conf)
    return conf * math.exp(-(1e-3 * dist ** 2) / conf ** 2)


def f_poly2(conf: float, dist: float) -> float:
    _check_conf(conf)
    return -5e-4 * ((dist - 1) / conf) ** 2 + conf


def f_poly4(conf: float, dist: float) -> float:
    _check_conf(conf)
    return -1e-6 * ((dist - 1) / conf) ** 4 + conf


LAWS = {"gauss": f_gauss, "poly2": f_poly2, "poly4": f_poly4}


def regroup_confidence(words, index: SpatialIndex, law: str = "gauss", max_dist: float | None = None):
    """Take the nearest neighbour's label when its distance-weighted confidence beats ours."""
    if law not in LAWS:
        raise ValueError(f"law must be one of {sorted(LAWS)}, got {law!r}")
    if max_dist is None:
        max_dist = default_max_dist(index.metric)
    _check_index(words, index)
    weigh = LAWS[law]
    idx, dist = index.neighbours_of_all(1, max_dist)
    new_labels = []
    for i, w in enumerate(words):
        j = idx[i, 0]
        new = w.label
        if j >= 0:
            nb = words[j]
            if weigh(nb.confidence, float(dist[i, 0])) > w.confidence:
                new = nb.label
        new_labels.append(new)
    return _apply(words, new_labels)


GROUPERS = ("none", "knn", "knn-constrained", "conf-gauss", "conf-poly2", "conf-poly4")


def apply_grouper(method: str, words, weights: DistanceWeights = DistanceWeights(),
                  k: int = DEFAULT_K, max_dist: float | None = None, metric: str = "centroid"):
    """Dispatch on the CLI method name."""
    if method not in GROUPERS:
        raise ValueError(f"unknown grouping method {method!r}; choose from {GROUPERS}")
    words = list(words)
    if method == "none" or not words:
        return words
    index = build_index(words, weights, metric)
    if method == "knn":
        return regroup_knn(words, index, k, max_dist)
    if method == "knn-constrained":
        return regroup_constrained(words, index, k, max_dist)
    return regroup_confidence(words, index, method.split("-", 1)[1], max_dist)
