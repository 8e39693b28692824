"""Sliding-cone contact transform and touching sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..cones import touch_tolerance
from ..errors import ConelabError, DomainError, EmptyRegionError
from ..field import RegionMask, ScalarField
from . import kernels

__all__ = [
    "ContactSet", "TouchingSets", "slide_transform", "slide_transform_reference",
    "touching_sets", "cone_penalty",
]


def _as2d(a):
    return a.reshape(a.shape[0], -1) if a.ndim == 1 else a


def cone_penalty(K, alpha, domain):
    """Table of ``K/(1+alpha) |k h|^(1+alpha)`` over absolute lattice offsets ``k``."""
    shape = domain.shape if domain.dim == 2 else (domain.shape[0], 1)
    return kernels.penalty_table(K / (1.0 + alpha), 1.0 + alpha, domain.h, shape)


@dataclass(frozen=True, eq=False)
class ContactSet:
    """Result of sliding concave cones of opening ``K`` under ``u`` (``sign='below'``)
    or convex cones over ``u`` (``sign='above'``, computed as ``below`` for ``-u``).

    Attributes
    ----------
    slide : ndarray
        Slide constants ``c(y)`` of the transformed problem (for ``'above'``
        these belong to ``-u``); ``inf`` off the vertex set.
    best_vertex : ndarray of int
        Flat index of the vertex recorded for each touch point, ``-1`` elsewhere.
    excess : ndarray
        ``u(x) + pen(x - y) - c(y)`` for the recorded vertex, ``inf`` elsewhere.
    """

    sign: str
    K: float
    alpha: float
    tol: float
    vertices: RegionMask
    search: RegionMask
    touch: RegionMask
    slide: np.ndarray
    best_vertex: np.ndarray
    excess: np.ndarray
    _work: np.ndarray = None

    @property
    def domain(self):
        return self.touch.domain

    def vertex_point(self, flat):
        idx = np.unravel_index(flat, self.domain.shape)
        return self.domain.point(idx)

    def argmin_set(self, flat_vertex):
        """Flat indices of search nodes touched by the cone at ``flat_vertex``."""
        dom = self.domain
        vidx = np.unravel_index(flat_vertex, dom.shape)
        if not self.vertices.mask[vidx]:
            raise ConelabError("not a vertex of this contact set")
        pen = cone_penalty(self.K, self.alpha, dom)
        sidx = np.nonzero(self.search.mask.ravel())[0]
        sub = np.unravel_index(sidx, dom.shape)
        offs = [np.abs(s - v) for s, v in zip(sub, vidx)]
        if dom.dim == 1:
            offs.append(np.zeros_like(offs[0]))
        vals = self._work.ravel()[sidx] + pen[offs[0], offs[1]]
        ex = vals - self.slide[vidx]
        return sidx[ex <= self.tol]

    def records(self):
        """``(vertex flat index, slide constant, touch flat indices)`` per vertex."""
        out = []
        for v in np.nonzero(self.vertices.mask.ravel())[0]:
            out.append((int(v), float(self.slide.ravel()[v]), self.argmin_set(v)))
        return out


class TouchingSets(NamedTuple):
    minus: RegionMask
    plus: RegionMask
    both: RegionMask


def _check(u, V, K, search):
    if not K > 0:
        raise ConelabError("opening K must be positive")
    if V.domain != u.domain or search.domain != u.domain:
        raise DomainError("masks and field live on different grids")
    if V.count == 0:
        raise EmptyRegionError("empty vertex set")
    if not V.issubset(search):
        raise ConelabError("vertex set must lie inside the search region")


def _prepare(u, sign):
    if sign == "below":
        return u.values
    if sign == "above":
        return -u.values
    raise ConelabError(f"sign must be 'below' or 'above', got {sign!r}")


def _finish(u, V, K, sign, alpha, search, tol, w, c, best_ex, best_v):
    dom = u.domain
    c = c.reshape(dom.shape)
    best_v = best_v.reshape(dom.shape)
    best_ex = best_ex.reshape(dom.shape)
    touch = RegionMask(dom, best_v >= 0)
    return ContactSet(sign, float(K), float(alpha), float(tol), V, search, touch,
                      c, best_v, best_ex, w)


def slide_transform(u, V, K, sign, alpha, search, tol=None, evaluate=None):
    """Touching set of cones of opening ``K`` with vertices in ``V``.

    For every vertex ``y`` the slide constant is
    ``c(y) = min_{x in search} u(x) + K/(1+alpha) |x - y|^(1+alpha)`` and
    ``x`` is touched when ``u(x) + K/(1+alpha) |x - y|^(1+alpha) <= c(y) + tol``.
    ``tol`` defaults to :func:`conelab.cones.touch_tolerance`.

    Parameters
    ----------
    u : ScalarField
    V, search : RegionMask
        Vertex nodes and candidate touch nodes, ``V`` inside ``search``.
    K : float
    sign : {'below', 'above'}
    alpha : float
    evaluate : RegionMask, optional
        Subset of ``search`` whose touch status is wanted (default: all of
        it).  Slide constants still use the whole search region, so results
        on ``evaluate`` are unchanged; other nodes are reported untouched.
    """
    _check(u, V, K, search)
    if evaluate is None:
        evaluate = search
    elif evaluate.domain != u.domain or not evaluate.issubset(search):
        raise ConelabError("evaluation region must lie inside the search region")
    if tol is None:
        tol = touch_tolerance(K, u.domain.h, alpha)
    w = _prepare(u, sign)
    w2 = np.ascontiguousarray(_as2d(w))
    vm = _as2d(V.mask)
    sm = _as2d(search.mask)
    pen = cone_penalty(K, alpha, u.domain)
    c = kernels.slide_constants(w2, pen, vm, sm)
    best_ex, best_v = kernels.touch_scan(w2, pen, c, vm, _as2d(evaluate.mask), tol)
    return _finish(u, V, K, sign, alpha, search, tol, w, c, best_ex, best_v)


def slide_transform_reference(u, V, K, sign, alpha, search, tol=None):
    """Direct O(|V| |search|) evaluation of :func:`slide_transform`."""
    _check(u, V, K, search)
    if tol is None:
        tol = touch_tolerance(K, u.domain.h, alpha)
    dom = u.domain
    w = _prepare(u, sign)
    pen = cone_penalty(K, alpha, dom)
    sidx = np.nonzero(search.mask.ravel())[0]
    ssub = np.unravel_index(sidx, dom.shape)
    ws = w.ravel()[sidx]
    c = np.full(dom.size, np.inf)
    best_ex = np.full(dom.size, np.inf)
    best_v = np.full(dom.size, -1, dtype=np.int64)
    ex_s = np.full(sidx.size, np.inf)
    v_s = np.full(sidx.size, -1, dtype=np.int64)
    for v in np.nonzero(V.mask.ravel())[0]:
        vsub = np.unravel_index(v, dom.shape)
        offs = [np.abs(s - k) for s, k in zip(ssub, vsub)]
        if dom.dim == 1:
            offs.append(np.zeros_like(offs[0]))
        vals = ws + pen[offs[0], offs[1]]
        cv = vals.min()
        c[v] = cv
        ex = vals - cv
        better = (ex <= tol) & (ex < ex_s)
        ex_s[better] = ex[better]
        v_s[better] = v
    best_ex[sidx] = ex_s
    best_v[sidx] = v_s
    return _finish(u, V, K, sign, alpha, search, tol, w, c, best_ex, best_v)


def touching_sets(u, V, K, gamma, search, tol=None, return_contacts=False, evaluate=None):
    """``(T_minus, T_plus, T)`` for cones of opening ``K`` and exponent ``1/(1+gamma)``."""
    alpha = 1.0 / (1.0 + gamma)
    lo = slide_transform(u, V, K, "below", alpha, search, tol, evaluate)
    hi = slide_transform(u, V, K, "above", alpha, search, tol, evaluate)
    sets = TouchingSets(lo.touch, hi.touch, lo.touch & hi.touch)
    if return_contacts:
        return sets, (lo, hi)
    return sets
