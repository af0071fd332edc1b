"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation so that both backends
produce bit-identical results. They are used when the compiled extension is
unavailable or when ``HPSEP_PURE_PYTHON=1`` is set.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


# --------------------------------------------------------------------------
# run-length smoothing

def rlsa_rows(img: np.ndarray, threshold: int) -> np.ndarray:
    """Fill white runs of length <= threshold lying between two ink pixels of a row."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    out = img.copy()
    if threshold <= 0 or img.size == 0:
        return out
    rows, cols = np.nonzero(img)
    if rows.size < 2:
        return out
    same_row = rows[1:] == rows[:-1]
    gap = cols[1:] - cols[:-1] - 1
    sel = same_row & (gap >= 1) & (gap <= threshold)
    if not sel.any():
        return out
    r = rows[1:][sel]
    start = cols[:-1][sel] + 1
    stop = cols[1:][sel]
    h, w = img.shape
    diff = np.zeros((h, w + 1), dtype=np.int32)
    np.add.at(diff, (r, start), 1)
    np.add.at(diff, (r, stop), -1)
    fill = np.cumsum(diff[:, :w], axis=1) > 0
    out[fill] = 1
    return out


# --------------------------------------------------------------------------
# kfill

def ring_offsets(k: int) -> list[tuple[int, int]]:
    """Clockwise (dy, dx) offsets of the k x k window border, starting top-left."""
    offs = [(0, x) for x in range(k)]
    offs += [(y, k - 1) for y in range(1, k)]
    offs += [(k - 1, x) for x in range(k - 2, -1, -1)]
    offs += [(y, 0) for y in range(k - 2, 0, -1)]
    return offs


def kfill_pass(img: np.ndarray, k: int, target: int) -> tuple[np.ndarray, int]:
    """One synchronous kfill pass flipping homogeneous cores to ``target``.

    Cores of size (k-2)x(k-2) must lie inside the image; ring pixels outside
    the image count as background.
    """
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape
    m = k - 2
    hc, wc = h - m + 1, w - m + 1
    if hc <= 0 or wc <= 0:
        return img.copy(), 0
    source = 1 - target
    # core homogeneity via integral image
    ii = np.zeros((h + 1, w + 1), dtype=np.int64)
    ii[1:, 1:] = np.cumsum(np.cumsum(img, axis=0, dtype=np.int64), axis=1)
    core_sum = ii[m:, m:] - ii[:hc, m:] - ii[m:, :wc] + ii[:hc, :wc]
    homogeneous = core_sum == (m * m if source == 1 else 0)
    if not homogeneous.any():
        return img.copy(), 0

    padded = np.zeros((h + 2, w + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = img
    offs = ring_offsets(k)
    ring = np.empty((len(offs), hc, wc), dtype=bool)
    for t, (dy, dx) in enumerate(offs):
        ring[t] = padded[dy:dy + hc, dx:dx + wc] == target
    n = ring.sum(axis=0)
    starts = ring & ~np.roll(ring, 1, axis=0)
    c = starts.sum(axis=0)
    c = np.where(n == len(offs), 1, c)
    corner_idx = [0, k - 1, 2 * (k - 1), 3 * (k - 1)]
    r = ring[corner_idx].sum(axis=0)
    thr = 3 * k - 4
    flip = homogeneous & (c <= 1) & ((n > thr) | ((n == thr) & (r == 2)))
    count_windows = int(flip.sum())
    out = img.copy()
    if count_windows == 0:
        return out, 0
    if m == 1:
        mask = flip
    else:
        # union of the m x m cores anchored at flagged positions
        ys, xs = np.nonzero(flip)
        fi = np.zeros((h + 1, w + 1), dtype=np.int32)
        np.add.at(fi, (ys, xs), 1)
        np.add.at(fi, (ys + m, xs), -1)
        np.add.at(fi, (ys, xs + m), -1)
        np.add.at(fi, (ys + m, xs + m), 1)
        mask = np.cumsum(np.cumsum(fi, axis=0), axis=1)[:h, :w] > 0
    changed = mask & (img != target)
    out[changed] = target
    return out, int(changed.sum())


# --------------------------------------------------------------------------
# kd-tree k-NN

def _item_distance(metric, qxl, qxh, qyl, qyh, xl, xh, yl, yh, wx, wy):
    if metric == 0:
        dx = qxl - xl
        dy = qyl - yl
        return math.sqrt((dx * dx) * (wx * wx) + (dy * dy) * (wy * wy))
    gx = max(0.0, xl - qxh - 1.0, qxl - xh - 1.0)
    gy = max(0.0, yl - qyh - 1.0, qyl - yh - 1.0)
    return math.sqrt(gx * gx + gy * gy)


def _node_bound(metric, qxl, qxh, qyl, qyh, xl, xh, yl, yh, wx, wy):
    if metric == 0:
        dx = max(0.0, xl - qxl, qxl - xh)
        dy = max(0.0, yl - qyl, qyl - yh)
        return math.sqrt((dx * dx) * (wx * wx) + (dy * dy) * (wy * wy))
    gx = max(0.0, xl - qxh - 1.0, qxl - xh - 1.0)
    gy = max(0.0, yl - qyh - 1.0, qyl - yh - 1.0)
    return math.sqrt(gx * gx + gy * gy)


def knn_query(node_lo, node_hi, node_left, node_right, node_hull, perm,
              items, ids, queries, qids, k, max_dist, metric, wx, wy):
    """Batch k-NN over a prebuilt tree.

    ``items``/``queries`` are (n, 4) float arrays of extents (xlo, xhi, ylo, yhi).
    Returns ``(idx, dist)`` of shape (nq, k), padded with -1 / inf. An item whose
    id equals the query id is skipped. Ordering is ascending (distance, id).
    """
    nq = queries.shape[0]
    out_idx = np.full((nq, k), -1, dtype=np.int64)
    out_dist = np.full((nq, k), np.inf, dtype=np.float64)
    if items.shape[0] == 0 or k <= 0:
        return out_idx, out_dist
    items_l = items.tolist()
    ids_l = ids.tolist()
    perm_l = perm.tolist()
    hull_l = node_hull.tolist()
    lo_l = node_lo.tolist()
    hi_l = node_hi.tolist()
    left_l = node_left.tolist()
    right_l = node_right.tolist()
    slack = 1e-9
    for qi in range(nq):
        qxl, qxh, qyl, qyh = (float(v) for v in queries[qi])
        qid = int(qids[qi])
        best: list[tuple[float, int, int]] = []  # sorted (dist, id, index)
        stack = [0]
        while stack:
            node = stack.pop()
            hx0, hx1, hy0, hy1 = hull_l[node]
            bound = _node_bound(metric, qxl, qxh, qyl, qyh, hx0, hx1, hy0, hy1, wx, wy)
            if bound > max_dist + slack:
                continue
            if len(best) == k and bound > best[-1][0] + slack:
                continue
            left = left_l[node]
            if left < 0:
                for p in range(lo_l[node], hi_l[node]):
                    j = perm_l[p]
                    jid = ids_l[j]
                    if jid == qid:
                        continue
                    xl, xh, yl, yh = items_l[j]
                    d = _item_distance(metric, qxl, qxh, qyl, qyh, xl, xh, yl, yh, wx, wy)
                    if d > max_dist:
                        continue
                    if len(best) == k and (d, jid) >= best[-1][:2]:
                        continue
                    entry = (d, jid, j)
                    pos = len(best)
                    while pos > 0 and best[pos - 1][:2] > entry[:2]:
                        pos -= 1
                    best.insert(pos, entry)
                    if len(best) > k:
                        best.pop()
                continue
            right = right_l[node]
            # push farther child first so the nearer one is explored first
            lb_l = _node_bound(metric, qxl, qxh, qyl, qyh, *hull_l[left], wx, wy)
            lb_r = _node_bound(metric, qxl, qxh, qyl, qyh, *hull_l[right], wx, wy)
            if lb_l <= lb_r:
                stack.append(right)
                stack.append(left)
            else:
                stack.append(left)
                stack.append(right)
        for t, (d, _, j) in enumerate(best):
            out_idx[qi, t] = j
            out_dist[qi, t] = d
    return out_idx, out_dist


# --------------------------------------------------------------------------
# SMO

def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """SMO on the SVM dual with maximal-violating-pair working-set selection.

    Minimises 1/2 a'Qa - e'a subject to 0 <= a <= C and y'a = 0, where
    Q = (y y') * K. Returns ``(alpha, rho, iterations)``; the decision
    function is ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    alpha = np.zeros(n)
    G = np.full(n, -1.0)
    QD = np.diagonal(K).copy()
    tau = 1e-12
    it = 0
    neg_inf = -np.inf
    while it < max_iter:
        minus_yg = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        cand_up = np.where(up, minus_yg, neg_inf)
        i = int(np.argmax(cand_up))
        cand_low = np.where(low, -minus_yg, neg_inf)
        j = int(np.argmax(cand_low))
        gmax = cand_up[i]
        gmin = -cand_low[j]
        if gmax - gmin < tol:
            break
        it += 1
        yi = y[i]
        yj = y[j]
        Qi = yi * y * K[i]
        Qj = yj * y * K[j]
        old_ai = alpha[i]
        old_aj = alpha[j]
        ai = old_ai
        aj = old_aj
        if yi != yj:
            quad = QD[i] + QD[j] + 2.0 * Qi[j]
            if quad <= 0:
                quad = tau
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Qi[j]
            if quad <= 0:
                quad = tau
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - old_ai
        daj = aj - old_aj
        G += Qi * dai + Qj * daj
    rho = _compute_rho(alpha, y, G, C)
    return alpha, rho, it


def _compute_rho(alpha, y, G, C):
    ub = np.inf
    lb = -np.inf
    sum_free = 0.0
    n_free = 0
    for t in range(y.shape[0]):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        return sum_free / n_free
    return (ub + lb) / 2.0
