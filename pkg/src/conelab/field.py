"""Uniform-grid fields, finite differences, region masks and discrete norms.

Grids are 1D or 2D boxes with one spacing ``h`` shared by every axis.  Node
values are stored row-major as numpy arrays of shape ``domain.shape``.  The
measure convention gives every node the weight ``h**dim`` (boundary nodes are
not half-weighted).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, EmptyRegionError, ConelabError

__all__ = [
    "GridDomain", "ScalarField", "VectorField", "SymMatrixField", "RegionMask",
    "in_ball", "lattice_ball_offsets",
    "gradient_central", "hessian_central", "lp_norm", "w1p_seminorm",
    "measure", "dyadic_lp_sum", "dyadic_bracket_constant", "field_rescale",
]

_SPACING_RTOL = 1e-12
_BALL_RTOL = 1e-12


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridDomain:
    """Box ``[lo, hi]`` sampled by ``n_pts`` nodes per axis."""

    lo: tuple
    hi: tuple
    n_pts: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n_pts))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n_pts", n)
        if not (len(lo) == len(hi) == len(n)) or len(n) not in (1, 2):
            raise DomainError("dim must be 1 or 2 with matching lo/hi/n_pts")
        for a, b, k in zip(lo, hi, n):
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise DomainError(f"need lo < hi, got {a}, {b}")
            if k < 5:
                raise DomainError(f"need at least 5 points per axis, got {k}")
        spacings = [(b - a) / (k - 1) for a, b, k in zip(lo, hi, n)]
        if any(abs(s - spacings[0]) > _SPACING_RTOL * spacings[0] for s in spacings):
            raise DomainError(f"axes must share one spacing, got {spacings}")

    @classmethod
    def box(cls, lo, hi, n, dim=2):
        return cls((lo,) * dim, (hi,) * dim, (n,) * dim)

    @classmethod
    def with_spacing(cls, lo, hi, h, dim=2):
        """Box ``[lo, hi]^dim`` with spacing ``h``; ``(hi - lo)/h`` must be an integer."""
        steps = (hi - lo) / h
        n = int(round(steps))
        if abs(steps - n) > 1e-9 * max(1.0, steps):
            raise DomainError(f"(hi - lo)/h = {steps} is not an integer")
        return cls.box(lo, hi, n + 1, dim)

    @property
    def dim(self):
        return len(self.n_pts)

    @property
    def shape(self):
        return self.n_pts

    @property
    def size(self):
        return int(np.prod(self.n_pts))

    @property
    def h(self):
        return (self.hi[0] - self.lo[0]) / (self.n_pts[0] - 1)

    @property
    def cell_volume(self):
        return self.h ** self.dim

    def axes(self):
        return [a + np.arange(k) * ((b - a) / (k - 1))
                for a, b, k in zip(self.lo, self.hi, self.n_pts)]

    def coords(self):
        """Node coordinates, shape ``shape + (dim,)``."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(grids, axis=-1)

    def point(self, index):
        index = np.atleast_1d(index)
        return np.array([a + i * ((b - a) / (k - 1))
                         for a, b, k, i in zip(self.lo, self.hi, self.n_pts, index)])

    def nearest_index(self, point):
        point = np.atleast_1d(np.asarray(point, dtype=float))
        idx = np.rint((point - np.array(self.lo)) / self.h).astype(int)
        return tuple(int(v) for v in idx)

    def contains(self, points, slack=1e-12):
        """Whether points (shape ``(..., dim)``) lie in the closed box."""
        points = np.asarray(points, dtype=float)
        tol = slack * self.h
        lo = np.array(self.lo) - tol
        hi = np.array(self.hi) + tol
        return np.all((points >= lo) & (points <= hi), axis=-1)

    def interior(self):
        m = np.zeros(self.shape, dtype=bool)
        m[(slice(1, -1),) * self.dim] = True
        return m

    def subsample(self, step=2):
        """The coarser grid made of every ``step``-th node."""
        n = []
        for k in self.n_pts:
            if (k - 1) % step:
                raise DomainError(f"{k - 1} intervals not divisible by {step}")
            n.append((k - 1) // step + 1)
        return GridDomain(self.lo, self.hi, tuple(n))


def _check_same_domain(a, b):
    if a != b:
        raise DomainError("fields live on different grids")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values of a real function; ``valid`` flags nodes usable in norms."""

    domain: GridDomain
    values: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.domain.shape)
        if not np.all(np.isfinite(v)):
            raise ConelabError("field values must be finite")
        object.__setattr__(self, "values", _readonly(v))
        if self.valid is not None:
            m = np.array(self.valid, dtype=bool).reshape(self.domain.shape)
            object.__setattr__(self, "valid", _readonly(m))

    @classmethod
    def from_function(cls, domain, fn):
        """Sample ``fn(coords)`` where coords has shape ``shape + (dim,)``."""
        return cls(domain, fn(domain.coords()))

    @classmethod
    def constant(cls, domain, c):
        return cls(domain, np.full(domain.shape, float(c)))

    def valid_mask(self):
        return np.ones(self.domain.shape, bool) if self.valid is None else self.valid

    def with_values(self, values):
        return ScalarField(self.domain, values, self.valid)

    def __neg__(self):
        return ScalarField(self.domain, -self.values, self.valid)

    def __mul__(self, c):
        return ScalarField(self.domain, self.values * float(c), self.valid)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    domain: GridDomain
    values: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        shape = self.domain.shape + (self.domain.dim,)
        v = np.array(self.values, dtype=float).reshape(shape)
        if not np.all(np.isfinite(v)):
            raise ConelabError("vector field components must be finite")
        object.__setattr__(self, "values", _readonly(v))
        if self.valid is not None:
            m = np.array(self.valid, dtype=bool).reshape(self.domain.shape)
            object.__setattr__(self, "valid", _readonly(m))

    def valid_mask(self):
        return np.ones(self.domain.shape, bool) if self.valid is None else self.valid

    def magnitude(self):
        return ScalarField(self.domain, np.linalg.norm(self.values, axis=-1), self.valid)


def _triu(dim):
    return np.triu_indices(dim)


@dataclass(frozen=True, eq=False)
class SymMatrixField:
    """Symmetric matrices per node, stored as the upper triangle.

    For ``dim == 2`` the components are ``(xx, xy, yy)``.
    """

    domain: GridDomain
    upper: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        d = self.domain.dim
        shape = self.domain.shape + (d * (d + 1) // 2,)
        v = np.array(self.upper, dtype=float).reshape(shape)
        if not np.all(np.isfinite(v)):
            raise ConelabError("matrix entries must be finite")
        object.__setattr__(self, "upper", _readonly(v))
        if self.valid is not None:
            m = np.array(self.valid, dtype=bool).reshape(self.domain.shape)
            object.__setattr__(self, "valid", _readonly(m))

    @classmethod
    def from_matrices(cls, domain, mats, valid=None):
        i, j = _triu(domain.dim)
        mats = np.asarray(mats, dtype=float)
        return cls(domain, 0.5 * (mats[..., i, j] + mats[..., j, i]), valid)

    @property
    def matrices(self):
        d = self.domain.dim
        i, j = _triu(d)
        out = np.empty(self.domain.shape + (d, d))
        out[..., i, j] = self.upper
        out[..., j, i] = self.upper
        return out

    def valid_mask(self):
        return np.ones(self.domain.shape, bool) if self.valid is None else self.valid


def in_ball(d2, radius):
    """Closed-ball test on squared distances, shared by masks and lattice balls."""
    return d2 <= radius * radius * (1.0 + _BALL_RTOL)


def lattice_ball_offsets(h, radius, dim):
    """Integer offsets ``k`` with ``|k h| <= radius``; shape ``(m, dim)``."""
    w = int(math.floor(radius / h * (1 + _BALL_RTOL)))
    rng = np.arange(-w, w + 1)
    grids = np.meshgrid(*([rng] * dim), indexing="ij")
    k = np.stack([g.ravel() for g in grids], axis=-1)
    d2 = (h * h) * np.sum(k * k, axis=-1).astype(float)
    return k[in_ball(d2, radius)]


@dataclass(frozen=True, eq=False)
class RegionMask:
    domain: GridDomain
    mask: np.ndarray
    descriptor: dict = dc_field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        if m.size != self.domain.size:
            raise DomainError("mask size does not match the domain")
        object.__setattr__(self, "mask", _readonly(m.reshape(self.domain.shape)))

    @classmethod
    def full(cls, domain):
        return cls(domain, np.ones(domain.shape, bool), {"kind": "full"})

    @classmethod
    def empty(cls, domain):
        return cls(domain, np.zeros(domain.shape, bool), {"kind": "explicit"})

    @classmethod
    def ball(cls, domain, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.shape != (domain.dim,):
            raise DomainError("ball center has the wrong dimension")
        d2 = np.sum((domain.coords() - center) ** 2, axis=-1)
        return cls(domain, in_ball(d2, radius),
                   {"kind": "ball", "center": center.tolist(), "radius": float(radius)})

    @property
    def count(self):
        return int(np.count_nonzero(self.mask))

    def is_ball(self):
        return self.descriptor.get("kind") == "ball"

    def _combine(self, other, op):
        _check_same_domain(self.domain, other.domain)
        return RegionMask(self.domain, op(self.mask, other.mask))

    def __and__(self, other):
        return self._combine(other, np.logical_and)

    def __or__(self, other):
        return self._combine(other, np.logical_or)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a & ~b)

    def __invert__(self):
        return RegionMask(self.domain, ~self.mask)

    def issubset(self, other):
        _check_same_domain(self.domain, other.domain)
        return not np.any(self.mask & ~other.mask)


def gradient_central(u):
    """Central differences inside, first-order one-sided differences on the boundary.

    Boundary nodes are flagged invalid in the returned field.
    """
    d = u.domain
    if min(d.n_pts) < 3:
        raise DomainError("gradient needs at least 3 points per axis")
    h = d.h
    v = u.values
    comps = []
    for ax in range(d.dim):
        g = np.empty_like(v)
        sl = [slice(None)] * d.dim

        def take(s):
            sl2 = list(sl)
            sl2[ax] = s
            return tuple(sl2)

        g[take(slice(1, -1))] = (v[take(slice(2, None))] - v[take(slice(None, -2))]) / (2 * h)
        g[take(0)] = (v[take(1)] - v[take(0)]) / h
        g[take(-1)] = (v[take(-1)] - v[take(-2)]) / h
        comps.append(g)
    valid = d.interior()
    if u.valid is not None:
        valid &= u.valid
    return VectorField(d, np.stack(comps, axis=-1), valid)


def hessian_central(u):
    """Three-point second differences and the four-point cross stencil.

    Boundary nodes copy the nearest interior value and are flagged invalid.
    """
    d = u.domain
    if min(d.n_pts) < 3:
        raise DomainError("hessian needs at least 3 points per axis")
    v = u.values
    h2 = d.h * d.h
    if d.dim == 1:
        inner = ((v[2:] - 2 * v[1:-1] + v[:-2]) / h2)[:, None]
    else:
        c = v[1:-1, 1:-1]
        uxx = (v[2:, 1:-1] - 2 * c + v[:-2, 1:-1]) / h2
        uyy = (v[1:-1, 2:] - 2 * c + v[1:-1, :-2]) / h2
        uxy = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h2)
        inner = np.stack([uxx, uxy, uyy], axis=-1)
    pad = [(1, 1)] * d.dim + [(0, 0)]
    upper = np.pad(inner, pad, mode="edge")
    valid = d.interior()
    if u.valid is not None:
        valid &= u.valid
    return SymMatrixField(d, upper, valid)


def _norm_mask(fld, region, include_flagged):
    _check_same_domain(fld.domain, region.domain)
    m = region.mask
    if not include_flagged and fld.valid is not None:
        m = m & fld.valid
    if not np.any(m):
        raise EmptyRegionError("region (after excluding flagged nodes) is empty")
    return m


def _riemann_lp(vals, p, cell):
    if math.isinf(p):
        return float(np.max(vals))
    return float((cell * np.sum(vals ** p)) ** (1.0 / p))


def lp_norm(g, p, region, include_flagged=False):
    """Discrete L^p norm ``(h^dim * sum |g|^p)^(1/p)``, the max for ``p = inf``.

    Vector fields are measured through their pointwise Euclidean length.
    """
    if not p > 0:
        raise ConelabError("p must be positive")
    m = _norm_mask(g, region, include_flagged)
    vals = g.values[m]
    vals = np.linalg.norm(vals, axis=-1) if isinstance(g, VectorField) else np.abs(vals)
    return _riemann_lp(vals, p, g.domain.cell_volume)


def forward_jacobian(V):
    """Forward-difference derivative matrices ``D[..., i, j] = d_j V_i`` and their
    validity (last node along any axis and flagged neighbours are invalid)."""
    d = V.domain
    h = d.h
    vals = V.values
    ok = V.valid_mask().copy()
    jac = np.zeros(d.shape + (d.dim, d.dim))
    for ax in range(d.dim):
        lead = [slice(None)] * d.dim
        nxt = [slice(None)] * d.dim
        lead[ax] = slice(0, -1)
        nxt[ax] = slice(1, None)
        jac[tuple(lead) + (slice(None), ax)] = (vals[tuple(nxt)] - vals[tuple(lead)]) / h
        shifted = np.zeros(d.shape, bool)
        shifted[tuple(lead)] = V.valid_mask()[tuple(nxt)]
        ok &= shifted
    return jac, ok


def w1p_seminorm(V, p, region):
    """L^p norm of the Frobenius norm of the forward-difference Jacobian of V."""
    if not p > 0:
        raise ConelabError("p must be positive")
    _check_same_domain(V.domain, region.domain)
    jac, ok = forward_jacobian(V)
    m = region.mask & ok
    if not np.any(m):
        raise EmptyRegionError("no node of the region has a forward difference")
    frob = np.sqrt(np.sum(jac[m] ** 2, axis=(-2, -1)))
    return _riemann_lp(frob, p, V.domain.cell_volume)


def measure(mask):
    """``h^dim`` times the number of true nodes."""
    return mask.domain.cell_volume * mask.count


def dyadic_bracket_constant(eta, M, p):
    """A constant C with ``S/C <= ||g||_p^p <= C (S + |region|)`` for every g >= 0.

    Per node with ``eta M^k < g <= eta M^(k+1)`` the dyadic sum collects at most
    ``M^(pk) M^p / (M^p - 1)`` while ``g^p`` lies in ``(eta^p M^(pk), eta^p M^(p(k+1))]``;
    nodes with ``g <= eta M`` are absorbed by ``(eta M)^p |region|``.
    """
    mp = M ** p
    lower = mp / ((mp - 1.0) * eta ** p)
    upper = eta ** p * mp
    return max(lower, upper, 1.0)


def dyadic_lp_sum(g, eta, M, p, region):
    """``S = sum_{k>=1} M^(pk) |{g > eta M^k}|``, truncated at the first empty level.

    Returns ``(S, k_last)`` where ``k_last`` is the last level that contributed
    (0 when none did).
    """
    if not (eta > 0 and M > 1 and p > 0):
        raise ConelabError("need eta > 0, M > 1, p > 0")
    _check_same_domain(g.domain, region.domain)
    vals = g.values[region.mask]
    if vals.size == 0:
        raise EmptyRegionError("empty region")
    if np.any(vals < 0):
        raise ConelabError("dyadic_lp_sum needs g >= 0 on the region")
    cell = g.domain.cell_volume
    s = 0.0
    k = 0
    while True:
        count = np.count_nonzero(vals > eta * M ** (k + 1))
        if count == 0:
            return s, k
        k += 1
        s += M ** (p * k) * cell * count


def field_rescale(u, r, x0, level_factor, alpha, target=None):
    """``v(y) = u(r y + x0) / (r^(1+alpha) level_factor)`` sampled on ``target``.

    ``target`` defaults to u's own grid.  Values between nodes come from
    multilinear interpolation.
    """
    if not (r > 0 and level_factor > 0):
        raise ConelabError("r and level_factor must be positive")
    target = u.domain if target is None else target
    if target.dim != u.domain.dim:
        raise DomainError("target grid has a different dimension")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    pts = r * target.coords() + x0
    if not np.all(u.domain.contains(pts)):
        raise DomainError("rescaled sample points leave the source grid")
    lo = np.array(u.domain.lo)
    hi = np.array(u.domain.hi)
    pts = np.clip(pts, lo, hi)
    interp = RegularGridInterpolator(u.domain.axes(), u.values, method="linear")
    vals = interp(pts.reshape(-1, u.domain.dim)).reshape(target.shape)
    return ScalarField(target, vals / (r ** (1 + alpha) * level_factor))
