"""Pointwise C^{1,alpha} seminorm by anchored affine minimax fits."""

from __future__ import annotations

import numpy as np

from ..errors import ConelabError, DomainError
from ..field import ScalarField, lattice_ball_offsets

__all__ = ["seminorm_field", "anchored_minimax", "FIT_SLACK"]

# Ratio bound between the pattern-search value and the exact discrete minimax,
# checked against a linear-programming oracle in the test suite.
FIT_SLACK = 1.001

_CHUNK = 512


def _directions(dim, count, phase):
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    th = phase + 2 * np.pi * np.arange(count) / count
    return np.stack([np.cos(th), np.sin(th)], axis=-1)


def _objective(A, B, p):
    # A: (P, m), B: (m, d), p: (P, ..., d)
    pred = np.einsum("md,p...d->p...m", B, p)
    if pred.ndim == 3:
        return np.max(np.abs(A[:, None, :] - pred), axis=-1)
    return np.max(np.abs(A - pred), axis=-1)


def anchored_minimax(A, B, rounds=2, n_dir=32, max_iter=200):
    """Approximately minimize ``max_k |A[i, k] - B[k] . p_i|`` over slopes ``p_i``.

    Starts from the least-squares slope and runs a compass search with step
    halving; later rounds rotate the direction set to escape kinks.

    Returns
    -------
    value : ndarray, shape (P,)
    slope : ndarray, shape (P, d)
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    dim = B.shape[1]
    p = np.linalg.lstsq(B, A.T, rcond=None)[0].T
    f = _objective(A, B, p)
    rad = float(np.max(np.linalg.norm(B, axis=-1)))
    for rnd in range(rounds):
        dirs = _directions(dim, n_dir, np.pi * rnd / (n_dir * rounds))
        step = np.maximum(f, 1e-300) / rad
        floor = 1e-13 * (np.abs(f) + 1e-300) / rad
        active = np.ones(p.shape[0], bool)
        for _ in range(max_iter):
            if not np.any(active):
                break
            ia = np.nonzero(active)[0]
            trial = p[ia, None, :] + step[ia, None, None] * dirs[None, :, :]
            ft = _objective(A[ia], B, trial)
            k = np.argmin(ft, axis=1)
            fb = ft[np.arange(ia.size), k]
            good = fb < f[ia]
            gi = ia[good]
            p[gi] = trial[good, k[good]]
            f[gi] = fb[good]
            bad = ia[~good]
            step[bad] *= 0.5
            active[bad] = step[bad] > floor[bad]
    return f, p


def seminorm_field(u, alpha, radii, region):
    """``max_r min_p max_{B_r(x0)} |u(x) - u(x0) - p.(x - x0)| / r^(1+alpha)``.

    The inner minimum is over affine functions through ``(x0, u(x0))``.
    Nodes of ``region`` whose largest window leaves the grid are flagged
    invalid and carry the value 0.
    """
    dom = u.domain
    if region.domain != dom:
        raise DomainError("mask and field live on different grids")
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] < 2 * dom.h * (1 - 1e-12):
        raise ConelabError("radii must be at least 2h")
    h = dom.h
    wmax = int(np.floor(radii[-1] / h * (1 + 1e-12)))
    idx = np.argwhere(region.mask)
    n = np.asarray(dom.n_pts)
    fits = np.all((idx >= wmax) & (idx <= n - 1 - wmax), axis=1)
    out = np.zeros(dom.shape)
    valid = np.zeros(dom.shape, bool)
    pts = idx[fits]
    vals = u.values
    best = np.zeros(len(pts))
    for r in radii:
        offs = lattice_ball_offsets(h, r, dom.dim)
        B = offs * h
        for s in range(0, len(pts), _CHUNK):
            chunk = pts[s:s + _CHUNK]
            centre = vals[tuple(chunk.T)]
            nb_idx = chunk[:, None, :] + offs[None, :, :]
            A = vals[tuple(np.moveaxis(nb_idx, -1, 0))] - centre[:, None]
            f, _ = anchored_minimax(A, B)
            best[s:s + _CHUNK] = np.maximum(best[s:s + _CHUNK], f / r ** (1 + alpha))
    out[tuple(pts.T)] = best
    valid[tuple(pts.T)] = True
    return ScalarField(dom, out, valid)
