"""Numba kernels for min-plus transforms on a uniform 2D lattice.

1D data is handled as an ``(n, 1)`` array.  Penalties live in a table
indexed by absolute integer offsets ``(|di|, |dj|)``; tables must be
nondecreasing along both axes, which makes row and segment pruning exact.
"""

import numpy as np
import numba as nb

SEG = 16


def penalty_table(scale, exponent, h, shape):
    """``scale * ((h*h) * (di^2 + dj^2))^(exponent/2)`` for ``0 <= di, dj < shape``."""
    di = np.arange(shape[0], dtype=np.float64)[:, None]
    dj = np.arange(shape[1], dtype=np.float64)[None, :]
    return scale * np.power((h * h) * (di * di + dj * dj), 0.5 * exponent)


def _seg_reduce(a, mask, fill, op):
    n0, n1 = a.shape
    nseg = (n1 + SEG - 1) // SEG
    padded = np.full((n0, nseg * SEG), fill)
    padded[:, :n1] = np.where(mask, a, fill)
    return op(padded.reshape(n0, nseg, SEG), axis=2)


@nb.njit(cache=True, inline="always")
def _seg_gap(b, s, n1):
    """Column distance from ``b`` to segment ``s``."""
    j0 = s * SEG
    j1 = min(j0 + SEG, n1) - 1
    if b < j0:
        return j0 - b
    if b > j1:
        return b - j1
    return 0


@nb.njit(parallel=True, cache=True)
def _slide_constants(u, pen, vmask, smask, segmin, umin):
    n0, n1 = u.shape
    nseg = segmin.shape[1]
    c = np.full((n0, n1), np.inf)
    for a in nb.prange(n0):
        for b in range(n1):
            if not vmask[a, b]:
                continue
            best = np.inf
            if smask[a, b]:
                best = u[a, b] + pen[0, 0]
            for d in range(n0):
                if pen[d, 0] + umin > best:
                    break
                for sgn in (-1, 1):
                    if d == 0 and sgn == 1:
                        continue
                    i = a + sgn * d
                    if i < 0 or i >= n0:
                        continue
                    for s in range(nseg):
                        g = _seg_gap(b, s, n1)
                        if segmin[i, s] + pen[d, g] > best:
                            continue
                        j1 = min(s * SEG + SEG, n1)
                        for j in range(s * SEG, j1):
                            if smask[i, j]:
                                v = u[i, j] + pen[d, abs(j - b)]
                                if v < best:
                                    best = v
            c[a, b] = best
    return c


@nb.njit(parallel=True, cache=True)
def _touch_scan(u, pen, c, vmask, smask, segmax, cmax, tol):
    n0, n1 = u.shape
    nseg = segmax.shape[1]
    best_ex = np.full((n0, n1), np.inf)
    best_v = np.full((n0, n1), -1, dtype=np.int64)
    for i in nb.prange(n0):
        for j in range(n1):
            if not smask[i, j]:
                continue
            ux = u[i, j]
            bex = np.inf
            bv = -1
            for d in range(n0):
                if (ux + pen[d, 0]) - cmax > tol:
                    break
                for sgn in (-1, 1):
                    if d == 0 and sgn == 1:
                        continue
                    a = i + sgn * d
                    if a < 0 or a >= n0:
                        continue
                    for s in range(nseg):
                        g = _seg_gap(j, s, n1)
                        if (ux + pen[d, g]) - segmax[a, s] > tol:
                            continue
                        b1 = min(s * SEG + SEG, n1)
                        for b in range(s * SEG, b1):
                            if not vmask[a, b]:
                                continue
                            ex = (ux + pen[d, abs(j - b)]) - c[a, b]
                            if ex <= tol:
                                flat = a * n1 + b
                                if ex < bex or (ex == bex and flat < bv):
                                    bex = ex
                                    bv = flat
            best_ex[i, j] = bex
            best_v[i, j] = bv
    return best_ex, best_v


def slide_constants(u, pen, vmask, smask):
    """``c(y) = min_{x in search} u(x) + pen(x - y)`` for every vertex ``y``; inf elsewhere."""
    segmin = _seg_reduce(u, smask, np.inf, np.min)
    umin = float(np.min(u[smask]))
    return _slide_constants(u, pen, vmask, smask, segmin, umin)


def touch_scan(u, pen, c, vmask, smask, tol):
    """For each search node, the vertex with the smallest excess ``u + pen - c``
    among those with excess ``<= tol`` (ties go to the smallest flat index)."""
    cc = np.where(vmask, c, -np.inf)
    segmax = _seg_reduce(cc, vmask, -np.inf, np.max)
    cmax = float(np.max(c[vmask]))
    return _touch_scan(u, pen, c, vmask, smask, segmax, cmax, float(tol))


@nb.njit(parallel=True, cache=True)
def _min_plus_all(u, pen, segmin, umin):
    n0, n1 = u.shape
    nseg = segmin.shape[1]
    out = np.empty((n0, n1))
    for a in nb.prange(n0):
        for b in range(n1):
            best = u[a, b] + pen[0, 0]
            for d in range(n0):
                if pen[d, 0] + umin > best:
                    break
                for sgn in (-1, 1):
                    if d == 0 and sgn == 1:
                        continue
                    i = a + sgn * d
                    if i < 0 or i >= n0:
                        continue
                    for s in range(nseg):
                        g = _seg_gap(b, s, n1)
                        if segmin[i, s] + pen[d, g] > best:
                            continue
                        j1 = min(s * SEG + SEG, n1)
                        for j in range(s * SEG, j1):
                            v = u[i, j] + pen[d, abs(j - b)]
                            if v < best:
                                best = v
            out[a, b] = best
    return out


def min_plus(u, pen):
    """``out(y) = min_x u(x) + pen(x - y)`` over the whole grid."""
    full = np.ones(u.shape, dtype=bool)
    segmin = _seg_reduce(u, full, np.inf, np.min)
    return _min_plus_all(u, pen, segmin, float(np.min(u)))
