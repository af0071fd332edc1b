# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Semantics match ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


def rlsa_rows(img, int threshold):
    cdef const cnp.uint8_t[:, ::1] src = np.ascontiguousarray(img, dtype=np.uint8)
    out_arr = np.array(src, dtype=np.uint8, copy=True)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t r, c, last, t
    if threshold <= 0:
        return out_arr
    for r in range(h):
        last = -1
        for c in range(w):
            if src[r, c]:
                if last >= 0 and c - last - 1 >= 1 and c - last - 1 <= threshold:
                    for t in range(last + 1, c):
                        out[r, t] = 1
                last = c
    return out_arr


def ring_offsets(int k):
    offs = [(0, x) for x in range(k)]
    offs += [(y, k - 1) for y in range(1, k)]
    offs += [(k - 1, x) for x in range(k - 2, -1, -1)]
    offs += [(y, 0) for y in range(k - 2, 0, -1)]
    return offs


def kfill_pass(img, int k, int target):
    cdef const cnp.uint8_t[:, ::1] src = np.ascontiguousarray(img, dtype=np.uint8)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef int m = k - 2
    cdef Py_ssize_t hc = h - m + 1, wc = w - m + 1
    out_arr = np.array(src, dtype=np.uint8, copy=True)
    if hc <= 0 or wc <= 0:
        return out_arr, 0
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef int source = 1 - target
    offs = ring_offsets(k)
    cdef int nring = len(offs)
    cdef cnp.int32_t[::1] ody = np.array([o[0] for o in offs], dtype=np.int32)
    cdef cnp.int32_t[::1] odx = np.array([o[1] for o in offs], dtype=np.int32)
    cdef cnp.uint8_t[::1] ring = np.zeros(nring, dtype=np.uint8)
    flags_arr = np.zeros((hc, wc), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] flags = flags_arr
    cdef int thr = 3 * k - 4
    cdef Py_ssize_t i, j, a, b, yy, xx
    cdef int t, n, c, r, homog, v
    cdef Py_ssize_t nflag = 0
    # fill pass pruning: a core whose (m+2)-square window holds fewer than
    # thr ink pixels cannot flip, so skip it without reading the ring
    colsum_arr = np.zeros(w + 2, dtype=np.int32)
    cdef cnp.int32_t[::1] colsum = colsum_arr
    cdef int win
    for i in range(hc):
        if target == 1:
            for xx in range(w):
                v = 0
                for yy in range(i - 1, i + m + 1):
                    if 0 <= yy < h:
                        v += src[yy, xx]
                colsum[xx + 1] = v
            win = 0
            for xx in range(m + 1):
                win += colsum[xx]
        for j in range(wc):
            if target == 1:
                # window columns j-1 .. j+m  ->  colsum[j] .. colsum[j+m+1]
                win += colsum[j + m + 1]
                if j > 0:
                    win -= colsum[j - 1]
                if win < thr:
                    continue
            homog = 1
            for a in range(m):
                for b in range(m):
                    if src[i + a, j + b] != source:
                        homog = 0
                        break
                if not homog:
                    break
            if not homog:
                continue
            n = 0
            for t in range(nring):
                yy = i - 1 + ody[t]
                xx = j - 1 + odx[t]
                if yy < 0 or yy >= h or xx < 0 or xx >= w:
                    v = 0
                else:
                    v = src[yy, xx]
                ring[t] = 1 if v == target else 0
                n += ring[t]
            if n == nring:
                c = 1
            else:
                c = 0
                for t in range(nring):
                    if ring[t] and not ring[(t + nring - 1) % nring]:
                        c += 1
            r = ring[0] + ring[k - 1] + ring[2 * (k - 1)] + ring[3 * (k - 1)]
            if c <= 1 and (n > thr or (n == thr and r == 2)):
                flags[i, j] = 1
                nflag += 1
    cdef Py_ssize_t changed = 0
    if nflag == 0:
        return out_arr, 0
    for i in range(hc):
        for j in range(wc):
            if flags[i, j]:
                for a in range(m):
                    for b in range(m):
                        if out[i + a, j + b] != target:
                            out[i + a, j + b] = target
                            changed += 1
    return out_arr, changed


cdef inline double _item_distance(int metric, double qxl, double qxh, double qyl, double qyh,
                                  double xl, double xh, double yl, double yh,
                                  double wx, double wy) nogil:
    cdef double dx, dy, gx, gy
    if metric == 0:
        dx = qxl - xl
        dy = qyl - yl
        return sqrt((dx * dx) * (wx * wx) + (dy * dy) * (wy * wy))
    gx = 0.0
    if xl - qxh - 1.0 > gx:
        gx = xl - qxh - 1.0
    if qxl - xh - 1.0 > gx:
        gx = qxl - xh - 1.0
    gy = 0.0
    if yl - qyh - 1.0 > gy:
        gy = yl - qyh - 1.0
    if qyl - yh - 1.0 > gy:
        gy = qyl - yh - 1.0
    return sqrt(gx * gx + gy * gy)


cdef inline double _node_bound(int metric, double qxl, double qxh, double qyl, double qyh,
                               double xl, double xh, double yl, double yh,
                               double wx, double wy) nogil:
    cdef double dx, dy
    if metric == 0:
        dx = 0.0
        if xl - qxl > dx:
            dx = xl - qxl
        if qxl - xh > dx:
            dx = qxl - xh
        dy = 0.0
        if yl - qyl > dy:
            dy = yl - qyl
        if qyl - yh > dy:
            dy = qyl - yh
        return sqrt((dx * dx) * (wx * wx) + (dy * dy) * (wy * wy))
    return _item_distance(1, qxl, qxh, qyl, qyh, xl, xh, yl, yh, wx, wy)


def knn_query(node_lo, node_hi, node_left, node_right, node_hull, perm,
              items, ids, queries, qids, int k, double max_dist, int metric,
              double wx, double wy):
    cdef Py_ssize_t nq = queries.shape[0]
    out_idx_arr = np.full((nq, max(k, 0)), -1, dtype=np.int64)
    out_dist_arr = np.full((nq, max(k, 0)), np.inf, dtype=np.float64)
    if items.shape[0] == 0 or k <= 0:
        return out_idx_arr, out_dist_arr
    cdef cnp.int64_t[:, ::1] out_idx = out_idx_arr
    cdef double[:, ::1] out_dist = out_dist_arr
    cdef const cnp.int64_t[::1] lo = np.ascontiguousarray(node_lo, dtype=np.int64)
    cdef const cnp.int64_t[::1] hi = np.ascontiguousarray(node_hi, dtype=np.int64)
    cdef const cnp.int64_t[::1] left = np.ascontiguousarray(node_left, dtype=np.int64)
    cdef const cnp.int64_t[::1] right = np.ascontiguousarray(node_right, dtype=np.int64)
    cdef const double[:, ::1] hull = np.ascontiguousarray(node_hull, dtype=np.float64)
    cdef const cnp.int64_t[::1] pm = np.ascontiguousarray(perm, dtype=np.int64)
    cdef const double[:, ::1] it = np.ascontiguousarray(items, dtype=np.float64)
    cdef const cnp.int64_t[::1] iid = np.ascontiguousarray(ids, dtype=np.int64)
    cdef const double[:, ::1] q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const cnp.int64_t[::1] qid_arr = np.ascontiguousarray(qids, dtype=np.int64)
    cdef Py_ssize_t nnodes = lo.shape[0]
    stack_arr = np.empty(nnodes + 2, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    bd_arr = np.empty(k + 1, dtype=np.float64)
    bid_arr = np.empty(k + 1, dtype=np.int64)
    bix_arr = np.empty(k + 1, dtype=np.int64)
    cdef double[::1] bd = bd_arr
    cdef cnp.int64_t[::1] bid = bid_arr
    cdef cnp.int64_t[::1] bix = bix_arr
    cdef double slack = 1e-9
    cdef Py_ssize_t qi, p, j, node, sp, nb, pos, l, rr
    cdef long long qid, jid
    cdef double qxl, qxh, qyl, qyh, bound, d, lb_l, lb_r
    with nogil:
        for qi in range(nq):
            qxl = q[qi, 0]
            qxh = q[qi, 1]
            qyl = q[qi, 2]
            qyh = q[qi, 3]
            qid = qid_arr[qi]
            nb = 0
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                bound = _node_bound(metric, qxl, qxh, qyl, qyh, hull[node, 0], hull[node, 1],
                                    hull[node, 2], hull[node, 3], wx, wy)
                if bound > max_dist + slack:
                    continue
                if nb == k and bound > bd[nb - 1] + slack:
                    continue
                l = left[node]
                if l < 0:
                    for p in range(lo[node], hi[node]):
                        j = pm[p]
                        jid = iid[j]
                        if jid == qid:
                            continue
                        d = _item_distance(metric, qxl, qxh, qyl, qyh, it[j, 0], it[j, 1],
                                           it[j, 2], it[j, 3], wx, wy)
                        if d > max_dist:
                            continue
                        if nb == k and (d > bd[nb - 1] or (d == bd[nb - 1] and jid >= bid[nb - 1])):
                            continue
                        pos = nb
                        while pos > 0 and (bd[pos - 1] > d or (bd[pos - 1] == d and bid[pos - 1] > jid)):
                            bd[pos] = bd[pos - 1]
                            bid[pos] = bid[pos - 1]
                            bix[pos] = bix[pos - 1]
                            pos -= 1
                        bd[pos] = d
                        bid[pos] = jid
                        bix[pos] = j
                        if nb < k:
                            nb += 1
                    continue
                rr = right[node]
                lb_l = _node_bound(metric, qxl, qxh, qyl, qyh, hull[l, 0], hull[l, 1],
                                   hull[l, 2], hull[l, 3], wx, wy)
                lb_r = _node_bound(metric, qxl, qxh, qyl, qyh, hull[rr, 0], hull[rr, 1],
                                   hull[rr, 2], hull[rr, 3], wx, wy)
                if lb_l <= lb_r:
                    stack[sp] = rr
                    stack[sp + 1] = l
                else:
                    stack[sp] = l
                    stack[sp + 1] = rr
                sp += 2
            for p in range(nb):
                out_idx[qi, p] = bix[p]
                out_dist[qi, p] = bd[p]
    return out_idx_arr, out_dist_arr


def smo_solve(K_in, y_in, double C, double tol, long max_iter):
    cdef const double[:, ::1] K = np.ascontiguousarray(K_in, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0]
    alpha_arr = np.zeros(n)
    G_arr = np.full(n, -1.0)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr
    QD_arr = np.diagonal(np.asarray(K)).copy()
    cdef double[::1] QD = QD_arr
    cdef double tau = 1e-12
    cdef long it = 0
    cdef Py_ssize_t i, j, t
    cdef double gmax, gmin, v, yi, yj, qij, quad, delta, diff, total
    cdef double old_ai, old_aj, ai, aj, dai, daj
    cdef int up, low
    with nogil:
        while it < max_iter:
            gmax = -INFINITY
            gmin = -INFINITY
            i = -1
            j = -1
            for t in range(n):
                up = (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0)
                low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
                v = -y[t] * G[t]
                if up and (i < 0 or v > gmax):
                    gmax = v
                    i = t
                if low and (j < 0 or -v > gmin):
                    gmin = -v
                    j = t
            if i < 0 or j < 0:
                break
            if gmax - (-gmin) < tol:
                break
            it += 1
            yi = y[i]
            yj = y[j]
            qij = yi * y[j] * K[i, j]
            old_ai = alpha[i]
            old_aj = alpha[j]
            ai = old_ai
            aj = old_aj
            if yi != yj:
                quad = QD[i] + QD[j] + 2.0 * qij
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
                quad = QD[i] + QD[j] - 2.0 * qij
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
            for t in range(n):
                G[t] += (yi * y[t] * K[i, t]) * dai + (yj * y[t] * K[j, t]) * daj
    rho = _compute_rho(alpha_arr, y_in, G_arr, C)
    return alpha_arr, rho, it


def _compute_rho(alpha, y, G, double C):
    cdef double[::1] a = alpha
    cdef const double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] g = G
    cdef double ub = INFINITY, lb = -INFINITY, sum_free = 0.0, yg
    cdef Py_ssize_t n_free = 0, t
    for t in range(yy.shape[0]):
        yg = yy[t] * g[t]
        if a[t] >= C:
            if yy[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif a[t] <= 0:
            if yy[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        return sum_free / n_free
    return (ub + lb) / 2.0
