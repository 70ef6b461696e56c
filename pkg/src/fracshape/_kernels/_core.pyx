# cython: language_level=3
"""Compiled twins of the kernels in ``_pycore``; same contracts, same results."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def seg_ball_masses(sx, sy, ex, ey, dens, cx, cy, rr):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sx_ = np.ascontiguousarray(sx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sy_ = np.ascontiguousarray(sy, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ex_ = np.ascontiguousarray(ex, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ey_ = np.ascontiguousarray(ey, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] de_ = np.ascontiguousarray(dens, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cx_ = np.ascontiguousarray(cx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cy_ = np.ascontiguousarray(cy, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rr_ = np.ascontiguousarray(rr, dtype=np.float64)
    cdef Py_ssize_t ns = sx_.shape[0], nc = cx_.shape[0], nr = rr_.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((nc, nr))
    if ns == 0 or nc == 0 or nr == 0:
        return out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dx = np.empty(ns), dy = np.empty(ns), l2 = np.empty(ns), ln = np.empty(ns)
    cdef Py_ssize_t s, i, j
    cdef double ddx, ddy, v
    for s in range(ns):
        ddx = ex_[s] - sx_[s]
        ddy = ey_[s] - sy_[s]
        v = ddx * ddx + ddy * ddy
        if v <= 0.0:
            raise ValueError("degenerate zero-length segment")
        dx[s] = ddx
        dy[s] = ddy
        l2[s] = v
        ln[s] = sqrt(v)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r2 = rr_ * rr_
    cdef double px, py, b, c0, disc, sq, t0, t1, chord
    for i in range(nc):
        for s in range(ns):
            px = sx_[s] - cx_[i]
            py = sy_[s] - cy_[i]
            b = px * dx[s] + py * dy[s]
            c0 = px * px + py * py
            for j in range(nr):
                disc = b * b - l2[s] * (c0 - r2[j])
                if disc <= 0.0:
                    continue
                sq = sqrt(disc)
                t0 = (-b - sq) / l2[s]
                t1 = (-b + sq) / l2[s]
                if t0 < 0.0:
                    t0 = 0.0
                if t1 > 1.0:
                    t1 = 1.0
                chord = t1 - t0
                if chord > 0.0:
                    out[i, j] += chord * ln[s] * de_[s]
    return out


def min_dist_points_segments(px, py, sx, sy, ex, ey):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] px_ = np.ascontiguousarray(px, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] py_ = np.ascontiguousarray(py, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sx_ = np.ascontiguousarray(sx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sy_ = np.ascontiguousarray(sy, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ex_ = np.ascontiguousarray(ex, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ey_ = np.ascontiguousarray(ey, dtype=np.float64)
    cdef Py_ssize_t npt = px_.shape[0], ns = sx_.shape[0]
    if ns == 0:
        raise ValueError("empty segment set")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(npt)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dx = ex_ - sx_, dy = ey_ - sy_
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l2 = np.maximum(dx * dx + dy * dy, 1e-300)
    cdef Py_ssize_t i, s
    cdef double wx, wy, t, ddx, ddy, d2, best
    for i in range(npt):
        best = 1e308
        for s in range(ns):
            wx = px_[i] - sx_[s]
            wy = py_[i] - sy_[s]
            t = (wx * dx[s] + wy * dy[s]) / l2[s]
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            ddx = wx - t * dx[s]
            ddy = wy - t * dy[s]
            d2 = ddx * ddx + ddy * ddy
            if d2 < best:
                best = d2
        out[i] = sqrt(best)
    return out


def points_in_polygon(px, py, vx, vy):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] px_ = np.ascontiguousarray(px, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] py_ = np.ascontiguousarray(py, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vx_ = np.ascontiguousarray(vx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vy_ = np.ascontiguousarray(vy, dtype=np.float64)
    cdef Py_ssize_t npt = px_.shape[0], n = vx_.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.zeros(npt, dtype=np.uint8)
    cdef Py_ssize_t i, e, k
    cdef double x, y, ax, ay, bx, by, xint
    cdef int parity
    for i in range(npt):
        x = px_[i]
        y = py_[i]
        parity = 0
        for e in range(n):
            ax = vx_[e]
            ay = vy_[e]
            k = e + 1
            if k == n:
                k = 0
            bx = vx_[k]
            by = vy_[k]
            if (ay > y) != (by > y):
                xint = ax + (y - ay) * (bx - ax) / (by - ay)
                if x < xint:
                    parity += 1
        out[i] = parity & 1
    return out.view(np.bool_)


def discrete_frechet(pxy, qxy):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] p = np.ascontiguousarray(pxy, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.ascontiguousarray(qxy, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], m = q.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prev = np.empty(m), cur = np.empty(m)
    cdef Py_ssize_t i, j
    cdef double dx, dy, d, best
    dx = p[0, 0] - q[0, 0]
    dy = p[0, 1] - q[0, 1]
    prev[0] = sqrt(dx * dx + dy * dy)
    for j in range(1, m):
        dx = p[0, 0] - q[j, 0]
        dy = p[0, 1] - q[j, 1]
        d = sqrt(dx * dx + dy * dy)
        prev[j] = prev[j - 1] if prev[j - 1] > d else d
    for i in range(1, n):
        dx = p[i, 0] - q[0, 0]
        dy = p[i, 1] - q[0, 1]
        d = sqrt(dx * dx + dy * dy)
        cur[0] = prev[0] if prev[0] > d else d
        for j in range(1, m):
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[j - 1] < best:
                best = cur[j - 1]
            dx = p[i, 0] - q[j, 0]
            dy = p[i, 1] - q[j, 1]
            d = sqrt(dx * dx + dy * dy)
            cur[j] = best if best > d else d
        prev, cur = cur, prev
    return float(prev[m - 1])


def besov_pair_sum(px, py, w, f_re, f_im, masses, beta):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] px_ = np.ascontiguousarray(px, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] py_ = np.ascontiguousarray(py, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_ = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fr = np.ascontiguousarray(f_re, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fi = np.ascontiguousarray(f_im, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ms = np.ascontiguousarray(masses, dtype=np.float64)
    cdef Py_ssize_t nq = ms.shape[0], nlev = ms.shape[1]
    cdef double beta_ = beta
    cdef double total = 0.0, rj, term, dx, dy, dr, di, diff2, dist2
    cdef Py_ssize_t i, k, j
    for j in range(nlev):
        rj = 2.0 ** (-<double> j)
        rj = rj * rj
        term = 0.0
        for i in range(nq):
            for k in range(nq):
                dx = px_[i] - px_[k]
                dy = py_[i] - py_[k]
                dist2 = dx * dx + dy * dy
                if dist2 < rj:
                    dr = fr[i] - fr[k]
                    di = fi[i] - fi[k]
                    diff2 = dr * dr + di * di
                    term += diff2 * (w_[i] / ms[i, j]) * (w_[k] / ms[k, j])
        total += 2.0 ** ((<double> j) * (beta_ - 1.0)) * term
    return total


cdef inline double _orient(double ax, double ay, double bx, double by, double cx, double cy) nogil:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef inline bint _on_seg(double ax, double ay, double bx, double by, double cx, double cy) nogil:
    cdef double lo, hi
    lo = ax if ax < bx else bx
    hi = ax if ax > bx else bx
    if cx < lo or cx > hi:
        return 0
    lo = ay if ay < by else by
    hi = ay if ay > by else by
    if cy < lo or cy > hi:
        return 0
    return 1


def polyline_self_intersects(x, y, closed):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_ = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_ = np.ascontiguousarray(y, dtype=np.float64)
    cdef bint cl = bool(closed)
    cdef Py_ssize_t npt = x_.shape[0]
    cdef Py_ssize_t n = npt if cl else npt - 1
    cdef Py_ssize_t i, j, i2, j2
    cdef double axi, ayi, bxi, byi, axj, ayj, bxj, byj
    cdef double d1, d2, d3, d4, ux, uy, vx2, vy2
    cdef double lo, hi
    # fold-back of consecutive segments
    for i in range(n - 1 + (1 if cl else 0)):
        j = (i + 1) % n
        ux = x_[(i + 1) % npt if cl else i + 1] - x_[i]
        uy = y_[(i + 1) % npt if cl else i + 1] - y_[i]
        vx2 = x_[(j + 1) % npt if cl else j + 1] - x_[j]
        vy2 = y_[(j + 1) % npt if cl else j + 1] - y_[j]
        if ux * vy2 - uy * vx2 == 0.0 and ux * vx2 + uy * vy2 < 0.0:
            return True
    for i in range(n):
        i2 = (i + 1) % npt if cl else i + 1
        axi = x_[i]
        ayi = y_[i]
        bxi = x_[i2]
        byi = y_[i2]
        lo = axi if axi < bxi else bxi
        hi = axi if axi > bxi else bxi
        for j in range(i + 2, n):
            if cl and i == 0 and j == n - 1:
                continue
            j2 = (j + 1) % npt if cl else j + 1
            axj = x_[j]
            ayj = y_[j]
            bxj = x_[j2]
            byj = y_[j2]
            # bounding-box reject on x
            if (axj < lo and bxj < lo) or (axj > hi and bxj > hi):
                continue
            d1 = _orient(axi, ayi, bxi, byi, axj, ayj)
            d2 = _orient(axi, ayi, bxi, byi, bxj, byj)
            d3 = _orient(axj, ayj, bxj, byj, axi, ayi)
            d4 = _orient(axj, ayj, bxj, byj, bxi, byi)
            if d1 * d2 < 0 and d3 * d4 < 0:
                return True
            if d1 == 0 and _on_seg(axi, ayi, bxi, byi, axj, ayj):
                return True
            if d2 == 0 and _on_seg(axi, ayi, bxi, byi, bxj, byj):
                return True
            if d3 == 0 and _on_seg(axj, ayj, bxj, byj, axi, ayi):
                return True
            if d4 == 0 and _on_seg(axj, ayj, bxj, byj, bxi, byi):
                return True
    return False
