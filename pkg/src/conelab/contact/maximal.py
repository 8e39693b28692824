"""Discrete Hardy-Littlewood maximal function over a finite set of radii."""

import numpy as np
from scipy.signal import fftconvolve

from ..errors import ConelabError, DomainError
from ..field import ScalarField, lattice_ball_offsets

__all__ = ["maximal_function", "default_radii"]


def default_radii(domain):
    """``2h, 4h, 8h, ...`` up to the box diameter."""
    h = domain.h
    diam = float(np.linalg.norm(np.subtract(domain.hi, domain.lo)))
    radii = []
    r = 2 * h
    while r <= diam:
        radii.append(r)
        r *= 2
    return radii


def maximal_function(g, region, radii=None):
    """``sup_r |B_r|^-1 sum_{B_r(x) and region} |g| h^dim`` over the given radii.

    ``|B_r|`` is the lattice-ball volume (node count times ``h^dim``), so a
    constant stays constant wherever the ball fits in the region.
    """
    dom = g.domain
    if region.domain != dom:
        raise DomainError("mask and field live on different grids")
    radii = default_radii(dom) if radii is None else list(radii)
    if not radii:
        raise ConelabError("need at least one radius")
    if any(r < dom.h * (1 - 1e-12) for r in radii):
        raise ConelabError("radii must be at least the grid spacing")
    data = np.where(region.mask, np.abs(g.values), 0.0)
    best = np.zeros(dom.shape)
    for r in radii:
        offs = lattice_ball_offsets(dom.h, r, dom.dim)
        w = offs.max()
        kern = np.zeros((2 * w + 1,) * dom.dim)
        kern[tuple((offs + w).T)] = 1.0
        avg = fftconvolve(data, kern, mode="same") / len(offs)
        best = np.maximum(best, avg)
    # fft round-off can leave tiny negative values
    return ScalarField(dom, np.maximum(best, 0.0))
