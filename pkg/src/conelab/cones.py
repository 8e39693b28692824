"""C^{1,alpha} cones: evaluation, scaling, difference cones and tangent cones.

A concave cone of opening ``K`` and vertex ``y`` is
``P(x) = -K/(1+alpha) |x - y|^(1+alpha) + C``; the convex cone flips the
sign of the first term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConelabError, DomainError
from .field import gradient_central
from .operators import stress

__all__ = [
    "Cone", "ConeJet", "cone_jet", "cone_values", "cone_scale", "cone_diff_vertex",
    "cone_diff_value", "cone_diff_max_principle", "tangent_cone_at",
    "dominating_cone", "touch_tolerance", "TOUCH_FACTOR",
]

TOUCH_FACTOR = 4.0


def touch_tolerance(K, h, alpha, factor=TOUCH_FACTOR):
    """Slack ``factor * K * h^(1+alpha)`` for discrete touching tests."""
    return factor * K * h ** (1.0 + alpha)


_SIGNS = {"concave": -1.0, "convex": 1.0}


@dataclass(frozen=True)
class Cone:
    sign: str
    K: float
    vertex: tuple
    C: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.sign not in _SIGNS:
            raise ConelabError(f"sign must be 'concave' or 'convex', got {self.sign!r}")
        if not self.K > 0:
            raise ConelabError("opening K must be positive")
        if not 0 < self.alpha <= 1:
            raise ConelabError("alpha must lie in (0, 1]")
        object.__setattr__(self, "vertex", tuple(float(v) for v in np.atleast_1d(self.vertex)))
        object.__setattr__(self, "K", float(self.K))
        object.__setattr__(self, "C", float(self.C))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def s(self):
        return _SIGNS[self.sign]

    def to_json(self):
        return {"sign": self.sign, "K": self.K, "vertex": list(self.vertex),
                "C": self.C, "alpha": self.alpha}


class ConeJet(NamedTuple):
    value: float
    grad: np.ndarray
    hess: np.ndarray
    at_vertex: bool


def cone_values(c, x):
    """Cone values at points ``x`` of shape ``(..., n)``."""
    d = np.asarray(x, dtype=float) - np.asarray(c.vertex)
    r2 = np.sum(d * d, axis=-1)
    return c.s * (c.K / (1 + c.alpha)) * np.power(r2, 0.5 * (1 + c.alpha)) + c.C


def cone_jet(c, x):
    """Value, gradient and Hessian of a cone at a single point.

    At the vertex the gradient is 0 and the Hessian is ``s*K*I`` for
    ``alpha = 1`` and ``s*inf`` on the diagonal otherwise; ``at_vertex``
    flags that case.
    """
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(c.vertex)
    n = d.size
    r = float(np.sqrt(np.dot(d, d)))
    a = c.alpha
    if r == 0.0:
        if a == 1.0:
            hess = c.s * c.K * np.eye(n)
        else:
            hess = np.where(np.eye(n, dtype=bool), c.s * np.inf, 0.0)
        return ConeJet(c.C, np.zeros(n), hess, True)
    dh = d / r
    value = c.s * (c.K / (1 + a)) * r ** (1 + a) + c.C
    grad = c.s * c.K * r ** a * dh
    hess = c.s * c.K * r ** (a - 1) * (np.eye(n) + (a - 1) * np.outer(dh, dh))
    return ConeJet(value, grad, hess, False)


def cone_scale(c, r):
    """The cone ``x -> P(r x) / r^(1+alpha)``: same opening, vertex ``y/r``."""
    if not r > 0:
        raise ConelabError("scale factor must be positive")
    if r == 1:
        return c
    return Cone(c.sign, c.K, tuple(v / r for v in c.vertex),
                c.C / r ** (1 + c.alpha), c.alpha)


def _ratio_power(opening_hi, opening_lo, alpha):
    if not opening_hi > opening_lo > 0:
        raise ConelabError("need opening_hi > opening_lo > 0 for a unique critical point")
    return (opening_hi / opening_lo) ** (1.0 / alpha)


def cone_diff_vertex(opening_hi, vertex_hi, opening_lo, vertex_lo, alpha):
    """Critical point ``(m y_hi - y_lo)/(m - 1)``, ``m = (K_hi/K_lo)^(1/alpha)``,
    of the difference of two concave cones.

    Evaluated as ``y_hi + (y_hi - y_lo)/(m - 1)``, which is exact for shared
    vertices and keeps the small offset from ``y_hi`` accurate for large ``m``.
    """
    m = _ratio_power(opening_hi, opening_lo, alpha)
    yh = np.asarray(vertex_hi, dtype=float)
    yl = np.asarray(vertex_lo, dtype=float)
    return yh + (yh - yl) / (m - 1.0)


def cone_diff_value(opening_hi, vertex_hi, opening_lo, vertex_lo, alpha, x):
    """``Q = P_hi - P_lo`` for concave cones with zero offsets."""
    hi = Cone("concave", opening_hi, vertex_hi, 0.0, alpha)
    lo = Cone("concave", opening_lo, vertex_lo, 0.0, alpha)
    return cone_values(hi, x) - cone_values(lo, x)


class MaxPrinciple(NamedTuple):
    holds: bool
    max_outside: float
    max_boundary: float


def _refine_circle_max(qfun, center, radius, n_samples=4096, rounds=40):
    theta = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    circle = lambda t: center + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
    vals = qfun(circle(theta))
    best = int(np.argmax(vals))
    lo, hi = theta[best] - 2 * np.pi / n_samples, theta[best] + 2 * np.pi / n_samples
    best_val = float(vals[best])
    for _ in range(rounds):
        t = np.linspace(lo, hi, 9)
        v = qfun(circle(t))
        k = int(np.argmax(v))
        best_val = max(best_val, float(v[k]))
        step = (hi - lo) / 8
        lo, hi = t[k] - step, t[k] + step
    return best_val


def cone_diff_max_principle(opening_hi, vertex_hi, opening_lo, vertex_lo, alpha, region):
    """Check that ``Q = P_hi - P_lo`` attains its exterior maximum on the region boundary.

    ``Q`` is sampled on a grid with the region's spacing covering a box four
    times the region's extent.  Ball regions compare against a refined sample
    of the continuum circle; other masks compare against the outer layer of
    exterior nodes adjacent to the mask.

    Raises
    ------
    ConelabError
        If the difference cone has no unique critical point or that point is
        not inside the region.
    """
    y0 = cone_diff_vertex(opening_hi, vertex_hi, opening_lo, vertex_lo, alpha)
    dom = region.domain
    h = dom.h
    q = lambda x: cone_diff_value(opening_hi, vertex_hi, opening_lo, vertex_lo, alpha, x)

    if region.is_ball():
        center = np.asarray(region.descriptor["center"], dtype=float)
        radius = float(region.descriptor["radius"])
        if np.linalg.norm(y0 - center) >= radius:
            raise ConelabError("difference-cone vertex lies outside the region")
        half = 4 * radius
        lo, hi = center - half, center + half
    else:
        idx = np.argwhere(region.mask)
        if idx.size == 0:
            raise ConelabError("empty region")
        k0 = dom.nearest_index(y0)
        inside = all(0 < k < n - 1 for k, n in zip(k0, dom.n_pts)) and region.mask[k0]
        if inside:
            nb = [tuple(k0[j] + (s if j == a else 0) for j in range(dom.dim))
                  for a in range(dom.dim) for s in (-1, 1)]
            inside = all(region.mask[t] for t in nb)
        if not inside:
            raise ConelabError("difference-cone vertex lies outside the region interior")
        lo_pt = dom.point(idx.min(axis=0))
        hi_pt = dom.point(idx.max(axis=0))
        center = 0.5 * (lo_pt + hi_pt)
        half = 2 * np.maximum(hi_pt - lo_pt, h)
        lo, hi = center - half, center + half

    # grid aligned with the region's lattice
    origin = np.asarray(dom.lo)
    i0 = np.floor((lo - origin) / h).astype(int)
    i1 = np.ceil((hi - origin) / h).astype(int)
    axes = [origin[a] + np.arange(i0[a], i1[a] + 1) * h for a in range(dom.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    qv = q(pts)
    tol = 1e-9 * (1.0 + float(np.max(np.abs(qv))))

    if region.is_ball():
        outside = np.sum((pts - center) ** 2, axis=-1) > radius ** 2
        if dom.dim == 2:
            max_b = _refine_circle_max(q, center, radius)
        else:
            max_b = float(np.max(q(np.array([center - radius, center + radius]))))
    else:
        inner = np.zeros(qv.shape, bool)
        dst, src = [], []
        for a in range(dom.dim):
            a0 = max(0, -i0[a])
            a1 = min(qv.shape[a], dom.n_pts[a] - i0[a])
            dst.append(slice(a0, a1))
            src.append(slice(a0 + i0[a], a1 + i0[a]))
        inner[tuple(dst)] = region.mask[tuple(src)]
        outside = ~inner
        layer = np.zeros_like(inner)
        for a in range(dom.dim):
            for s in (-1, 1):
                layer |= np.roll(inner, s, axis=a)
        layer &= outside
        max_b = float(np.max(qv[layer]))
    max_out = float(np.max(qv[outside]))
    return MaxPrinciple(bool(max_out <= max_b + tol), max_out, max_b)


def tangent_cone_at(u, x0, K, sign, gamma, search_region, tol=None):
    """The cone of opening ``K`` matching value and gradient of ``u`` at node ``x0``.

    ``sign='below'`` builds a concave cone with vertex
    ``x0 + K^-(1+gamma) V(Du(x0))``; ``sign='above'`` a convex cone with vertex
    ``x0 - K^-(1+gamma) V(Du(x0))``.  The cone is returned only when it stays
    on the correct side of ``u`` over ``search_region`` up to ``tol``
    (default :func:`touch_tolerance`); otherwise ``None``.

    Raises
    ------
    DomainError
        If ``x0`` is not an interior node or the vertex leaves the grid box.
    """
    dom = u.domain
    x0 = tuple(int(i) for i in np.atleast_1d(x0))
    if not all(0 < i < n - 1 for i, n in zip(x0, dom.n_pts)):
        raise DomainError("x0 must be an interior node")
    if not K > 0:
        raise ConelabError("K must be positive")
    if sign not in ("below", "above"):
        raise ConelabError("sign must be 'below' or 'above'")
    alpha = 1.0 / (1.0 + gamma)
    p = gradient_central(u).values[x0]
    s = 1.0 if sign == "below" else -1.0
    xp = dom.point(x0)
    y = xp + s * K ** (-(1.0 + gamma)) * stress(p, gamma)
    if not dom.contains(y):
        raise DomainError("tangent-cone vertex lies outside the grid box")
    kind = "concave" if sign == "below" else "convex"
    C = float(u.values[x0]) + s * (K / (1 + alpha)) * float(np.linalg.norm(xp - y)) ** (1 + alpha)
    cone = Cone(kind, K, tuple(y), C, alpha)
    if tol is None:
        tol = touch_tolerance(K, dom.h, alpha)
    pv = cone_values(cone, dom.coords())
    gap = (u.values - pv) if sign == "below" else (pv - u.values)
    if np.min(gap[search_region.mask]) < -tol:
        return None
    return cone


def dominating_cone(cone, x0, K_new):
    """Concave cone of opening ``K_new >= K`` tangent to ``cone`` at ``x0``.

    Its vertex is ``x0 + (K/K_new)^(1/alpha) (y - x0)``; it lies below ``cone``.
    """
    if cone.sign != "concave":
        raise ConelabError("dominating_cone expects a concave cone")
    if K_new < cone.K:
        raise ConelabError("K_new must be at least the cone's opening")
    x0 = np.asarray(x0, dtype=float)
    y = np.asarray(cone.vertex)
    y_new = x0 + (cone.K / K_new) ** (1.0 / cone.alpha) * (y - x0)
    val = float(cone_values(cone, x0))
    r = float(np.linalg.norm(x0 - y_new))
    C = val + (K_new / (1 + cone.alpha)) * r ** (1 + cone.alpha)
    return Cone("concave", K_new, tuple(y_new), C, cone.alpha)
