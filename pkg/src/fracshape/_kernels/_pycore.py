"""Pure NumPy implementations of the hot kernels.

Semantics must match ``_core.pyx`` bit-for-bit up to floating-point
reassociation; the parity test suite asserts agreement to 1e-12.
"""
from __future__ import annotations

import numpy as np

# element budget per broadcast chunk; keeps temporaries ~tens of MB
_CHUNK_ELEMS = 4_000_000


def seg_ball_masses(sx, sy, ex, ey, dens, cx, cy, rr):
    """Measure of discs against a weighted segment soup.

    out[i, j] = sum over segments of (length of segment inside the disc
    centered at (cx[i], cy[i]) with radius rr[j]) times the segment density.
    The chord length is the exact root interval of the quadratic
    |p + t*(q - p) - c|^2 = r^2 clipped to t in [0, 1]; open and closed
    discs give the same value (the circle meets a segment in a null set).
    """
    sx, sy, ex, ey, dens, cx, cy, rr = (
        np.ascontiguousarray(a, dtype=np.float64) for a in (sx, sy, ex, ey, dens, cx, cy, rr)
    )
    ns, nc, nr = sx.size, cx.size, rr.size
    out = np.zeros((nc, nr))
    if ns == 0 or nc == 0 or nr == 0:
        return out
    dx = ex - sx
    dy = ey - sy
    l2 = dx * dx + dy * dy
    if np.any(l2 <= 0.0):
        raise ValueError("degenerate zero-length segment")
    ln = np.sqrt(l2)
    r2 = rr * rr
    cstep = max(1, _CHUNK_ELEMS // max(ns * min(nr, 64), 1))
    for i0 in range(0, nc, cstep):
        i1 = min(nc, i0 + cstep)
        px = sx[None, :] - cx[i0:i1, None]
        py = sy[None, :] - cy[i0:i1, None]
        b = px * dx[None, :] + py * dy[None, :]
        c0 = px * px + py * py
        for j0 in range(0, nr, 64):
            j1 = min(nr, j0 + 64)
            disc = b[:, None, :] ** 2 - l2[None, None, :] * (
                c0[:, None, :] - r2[None, j0:j1, None]
            )
            ok = disc > 0.0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            t0 = np.maximum((-b[:, None, :] - sq) / l2[None, None, :], 0.0)
            t1 = np.minimum((-b[:, None, :] + sq) / l2[None, None, :], 1.0)
            chord = np.where(ok, np.maximum(t1 - t0, 0.0), 0.0) * ln[None, None, :]
            out[i0:i1, j0:j1] = chord @ dens
    return out


def min_dist_points_segments(px, py, sx, sy, ex, ey):
    """Distance from each point to the nearest segment of the soup."""
    px, py, sx, sy, ex, ey = (
        np.ascontiguousarray(a, dtype=np.float64) for a in (px, py, sx, sy, ex, ey)
    )
    npt, ns = px.size, sx.size
    if ns == 0:
        raise ValueError("empty segment set")
    dx = ex - sx
    dy = ey - sy
    l2 = np.maximum(dx * dx + dy * dy, 1e-300)
    out = np.empty(npt)
    pstep = max(1, _CHUNK_ELEMS // max(ns, 1))
    for i0 in range(0, npt, pstep):
        i1 = min(npt, i0 + pstep)
        wx = px[i0:i1, None] - sx[None, :]
        wy = py[i0:i1, None] - sy[None, :]
        t = np.clip((wx * dx[None, :] + wy * dy[None, :]) / l2[None, :], 0.0, 1.0)
        ddx = wx - t * dx[None, :]
        ddy = wy - t * dy[None, :]
        out[i0:i1] = np.sqrt(np.min(ddx * ddx + ddy * ddy, axis=1))
    return out


def points_in_polygon(px, py, vx, vy):
    """Crossing-parity point-in-polygon test (boundary points unspecified)."""
    px, py, vx, vy = (np.ascontiguousarray(a, dtype=np.float64) for a in (px, py, vx, vy))
    npt = px.size
    inside = np.zeros(npt, dtype=bool)
    n = vx.size
    ax, ay = vx, vy
    bx, by = np.roll(vx, -1), np.roll(vy, -1)
    pstep = max(1, _CHUNK_ELEMS // max(n, 1))
    for i0 in range(0, npt, pstep):
        i1 = min(npt, i0 + pstep)
        x = px[i0:i1, None]
        y = py[i0:i1, None]
        cross = (ay[None, :] > y) != (by[None, :] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax[None, :] + (y - ay[None, :]) * (bx - ax)[None, :] / (by - ay)[None, :]
        hit = cross & (x < xint)
        inside[i0:i1] = np.sum(hit, axis=1) % 2 == 1
    return inside


def discrete_frechet(pxy, qxy):
    """Discrete Fréchet distance between two vertex chains (standard DP)."""
    p = np.ascontiguousarray(pxy, dtype=np.float64)
    q = np.ascontiguousarray(qxy, dtype=np.float64)
    n, m = len(p), len(q)
    d = np.sqrt(
        (p[:, 0:1] - q[None, :, 0]) ** 2 + (p[:, 1:2] - q[None, :, 1]) ** 2
    )
    prev = np.empty(m)
    prev[0] = d[0, 0]
    for j in range(1, m):
        prev[j] = max(prev[j - 1], d[0, j])
    cur = np.empty(m)
    for i in range(1, n):
        cur[0] = max(prev[0], d[i, 0])
        di = d[i]
        for j in range(1, m):
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = best if best > di[j] else di[j]
        prev, cur = cur, prev
    return float(prev[m - 1])


def besov_pair_sum(px, py, w, f_re, f_im, masses, beta):
    """Dyadic double sum of the trace-space seminorm (ambient dimension 2).

    masses[i, j] = mu(B(x_i, 2^-j)), j = 0..nlev-1.  Returns
    sum_j 2^{j(beta-1)} * sum_{|x_i-x_k| < 2^-j} (f_i-f_k)^2 w_i w_k / (m_ij m_kj).
    """
    px, py, w, f_re, f_im = (
        np.ascontiguousarray(a, dtype=np.float64) for a in (px, py, w, f_re, f_im)
    )
    masses = np.ascontiguousarray(masses, dtype=np.float64)
    nq, nlev = masses.shape
    dist = np.sqrt(
        (px[:, None] - px[None, :]) ** 2 + (py[:, None] - py[None, :]) ** 2
    )
    diff2 = (f_re[:, None] - f_re[None, :]) ** 2 + (f_im[:, None] - f_im[None, :]) ** 2
    total = 0.0
    for j in range(nlev):
        rj = 2.0 ** (-j)
        wm = w / masses[:, j]
        mask = dist < rj
        term = float(np.einsum("ik,i,k->", diff2 * mask, wm, wm))
        total += 2.0 ** (j * (beta - 1.0)) * term
    return total


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def polyline_self_intersects(x, y, closed):
    """True if any two non-adjacent segments of the chain intersect (touching counts).

    Also true if adjacent segments overlap collinearly (the chain folds back).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.size - (1 if not closed else 0)
    ax = x[:n]
    ay = y[:n]
    bx = np.roll(x, -1)[:n] if closed else x[1 : n + 1]
    by = np.roll(y, -1)[:n] if closed else y[1 : n + 1]
    # fold-back between consecutive segments: next direction exactly opposite
    for i in range(n - 1 + (1 if closed else 0)):
        j = (i + 1) % n
        ux, uy = bx[i] - ax[i], by[i] - ay[i]
        vx_, vy_ = bx[j] - ax[j], by[j] - ay[j]
        if ux * vy_ - uy * vx_ == 0.0 and ux * vx_ + uy * vy_ < 0.0:
            return True
    step = max(1, _CHUNK_ELEMS // max(n, 1))
    for i0 in range(0, n, step):
        i1 = min(n, i0 + step)
        ii = np.arange(i0, i1)
        d1 = _orient(ax[ii, None], ay[ii, None], bx[ii, None], by[ii, None], ax[None, :], ay[None, :])
        d2 = _orient(ax[ii, None], ay[ii, None], bx[ii, None], by[ii, None], bx[None, :], by[None, :])
        d3 = _orient(ax[None, :], ay[None, :], bx[None, :], by[None, :], ax[ii, None], ay[ii, None])
        d4 = _orient(ax[None, :], ay[None, :], bx[None, :], by[None, :], bx[ii, None], by[ii, None])
        proper = ((d1 * d2) < 0) & ((d3 * d4) < 0)
        touch = ((d1 == 0) & _on_seg(ax[ii, None], ay[ii, None], bx[ii, None], by[ii, None], ax[None, :], ay[None, :])) | (
            (d2 == 0) & _on_seg(ax[ii, None], ay[ii, None], bx[ii, None], by[ii, None], bx[None, :], by[None, :])
        ) | (
            (d3 == 0) & _on_seg(ax[None, :], ay[None, :], bx[None, :], by[None, :], ax[ii, None], ay[ii, None])
        ) | (
            (d4 == 0) & _on_seg(ax[None, :], ay[None, :], bx[None, :], by[None, :], bx[ii, None], by[ii, None])
        )
        hit = proper | touch
        jj = np.arange(n)[None, :]
        gap = np.abs(jj - ii[:, None])
        adjacent = (gap <= 1) | (closed & (gap == n - 1))
        hit &= ~adjacent
        if np.any(hit):
            return True
    return False


def _on_seg(ax, ay, bx, by, cx, cy):
    # c collinear with a-b assumed; test c within the bounding box of [a, b]
    return (
        (np.minimum(ax, bx) <= cx)
        & (cx <= np.maximum(ax, bx))
        & (np.minimum(ay, by) <= cy)
        & (cy <= np.maximum(ay, by))
    )
