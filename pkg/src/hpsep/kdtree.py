"""kd-tree over word extents supporting the weighted-centroid and bounding-box metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels

CENTROID = 0
BBOX = 1
METRICS = {"centroid": CENTROID, "bbox": BBOX}


@dataclass(frozen=True, eq=False)
class KdTree:
    """Array-encoded kd-tree.

    ``items`` rows are extents (x_lo, x_hi, y_lo, y_hi); points have lo == hi.
    Each node stores the range [lo, hi) of ``perm`` it covers, its children
    (-1 for leaves) and the hull of the extents below it.
    """

    items: np.ndarray
    ids: np.ndarray
    perm: np.ndarray
    node_lo: np.ndarray
    node_hi: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_hull: np.ndarray
    metric: int
    wx: float
    wy: float

    def query(self, queries: np.ndarray, qids: np.ndarray, k: int, max_dist: float):
        queries = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 4)
        qids = np.ascontiguousarray(qids, dtype=np.int64)
        return kernels.knn_query(self.node_lo, self.node_hi, self.node_left, self.node_right,
                                 self.node_hull, self.perm, self.items, self.ids, queries, qids,
                                 int(k), float(max_dist), self.metric, float(self.wx), float(self.wy))


def build_tree(items: np.ndarray, ids: np.ndarray, metric: int = CENTROID,
               wx: float = 1.0, wy: float = 1.0, leaf_size: int = 8) -> KdTree:
    """Median-split kd-tree; the split axis is the one with the larger weighted spread."""
    items = np.ascontiguousarray(items, dtype=np.float64).reshape(-1, 4)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    n = items.shape[0]
    cx = (items[:, 0] + items[:, 1]) * 0.5
    cy = (items[:, 2] + items[:, 3]) * 0.5
    perm = np.arange(n, dtype=np.int64)
    lo_l, hi_l, left_l, right_l, hull_l = [], [], [], [], []

    def new_node(lo, hi):
        idx = perm[lo:hi]
        if hi > lo:
            sub = items[idx]
            hull = (sub[:, 0].min(), sub[:, 1].max(), sub[:, 2].min(), sub[:, 3].max())
        else:
            hull = (np.inf, -np.inf, np.inf, -np.inf)
        lo_l.append(lo)
        hi_l.append(hi)
        left_l.append(-1)
        right_l.append(-1)
        hull_l.append(hull)
        return len(lo_l) - 1

    root = new_node(0, n)
    stack = [root]
    while stack:
        node = stack.pop()
        lo, hi = lo_l[node], hi_l[node]
        if hi - lo <= leaf_size:
            continue
        idx = perm[lo:hi]
        sx = (cx[idx].max() - cx[idx].min()) * wx
        sy = (cy[idx].max() - cy[idx].min()) * wy
        key = cx[idx] if sx >= sy else cy[idx]
        order = np.lexsort((ids[idx], key))
        perm[lo:hi] = idx[order]
        mid = lo + (hi - lo) // 2
        left = new_node(lo, mid)
        right = new_node(mid, hi)
        left_l[node] = left
        right_l[node] = right
        stack.append(left)
        stack.append(right)

    return KdTree(
        items=items, ids=ids, perm=perm,
        node_lo=np.asarray(lo_l, dtype=np.int64),
        node_hi=np.asarray(hi_l, dtype=np.int64),
        node_left=np.asarray(left_l, dtype=np.int64),
        node_right=np.asarray(right_l, dtype=np.int64),
        node_hull=np.asarray(hull_l, dtype=np.float64).reshape(-1, 4),
        metric=metric, wx=wx, wy=wy,
    )
