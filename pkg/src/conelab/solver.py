"""Pseudo-time relaxation for ``(|Du|^2 + eps^2)^(gamma/2) Op(D^2u) = f`` on 2D boxes.

``Op`` is a Pucci extremal operator or the nondivergence p-Laplacian
``tr M + gamma <M p, p> / (|p|^2 + eps^2)``.  Derivatives are the central
differences of :mod:`conelab.field`; boundary nodes hold Dirichlet data.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
import math
import time

import numba as nb
import numpy as np

from .errors import ConelabError, DomainError
from .field import GridDomain, ScalarField, RegionMask
from .operators import DegeneracyParams

__all__ = [
    "ProblemSpec", "SolveReport", "relax_solve", "residual", "refine_study",
    "boundary_interpolant", "singular_rhs", "OPERATORS",
]

OPERATORS = {"pucci_plus": 0, "pucci_minus": 1, "p_laplacian": 2}


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Dirichlet problem on ``f.domain``.

    ``boundary`` supplies the boundary values (its interior values are
    ignored).  ``reg_eps=None`` means ``h``.  ``momentum=None`` picks a
    heavy-ball factor from the grid size; ``0`` gives plain relaxation.
    """

    params: DegeneracyParams
    operator: str
    f: ScalarField
    boundary: ScalarField
    reg_eps: float = None
    cfl: float = 0.8
    tol_res: float = 1e-8
    max_iters: int = 200_000
    momentum: float = None
    local_step: bool = False

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ConelabError(f"unknown operator {self.operator!r}")
        if self.f.domain.dim != 2:
            raise DomainError("the solver works on 2D grids")
        if self.boundary.domain != self.f.domain:
            raise DomainError("rhs and boundary data live on different grids")
        if not self.tol_res > 0:
            raise ConelabError("tol_res must be positive")
        if self.reg_eps is not None and self.reg_eps < 0:
            raise ConelabError("reg_eps must be nonnegative")
        if not 0 < self.cfl <= 1:
            raise ConelabError("cfl must lie in (0, 1]")

    @property
    def domain(self):
        return self.f.domain

    @property
    def eps(self):
        return self.domain.h if self.reg_eps is None else float(self.reg_eps)

    def restrict(self, step=2):
        """The same problem sampled on every ``step``-th node."""
        dom = self.domain.subsample(step)
        sub = (slice(None, None, step),) * 2
        f = ScalarField(dom, self.f.values[sub])
        g = ScalarField(dom, self.boundary.values[sub])
        eps = None if self.reg_eps is None else self.reg_eps
        return ProblemSpec(self.params, self.operator, f, g, eps, self.cfl, self.tol_res,
                           self.max_iters, self.momentum, self.local_step)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    wall_time: float = 0.0

    def to_json(self, include_time=False):
        d = asdict(self)
        if not include_time:
            d.pop("wall_time")
        return d


@nb.njit(cache=True, inline="always")
def _local_op(u, i, j, h, code, gamma, lam, Lam, eps):
    c = u[i, j]
    uxx = (u[i + 1, j] - 2.0 * c + u[i - 1, j]) / (h * h)
    uyy = (u[i, j + 1] - 2.0 * c + u[i, j - 1]) / (h * h)
    uxy = (u[i + 1, j + 1] - u[i + 1, j - 1] - u[i - 1, j + 1] + u[i - 1, j - 1]) / (4.0 * h * h)
    px = (u[i + 1, j] - u[i - 1, j]) / (2.0 * h)
    py = (u[i, j + 1] - u[i, j - 1]) / (2.0 * h)
    q = px * px + py * py + eps * eps
    coef = q ** (0.5 * gamma) if gamma != 0.0 else 1.0
    if code == 2:
        if q > 0.0:
            val = uxx + uyy + gamma * (px * px * uxx + 2.0 * px * py * uxy + py * py * uyy) / q
        else:
            val = uxx + uyy
    else:
        m = 0.5 * (uxx + uyy)
        r = math.hypot(0.5 * (uxx - uyy), uxy)
        e0 = m - r
        e1 = m + r
        neg = min(e0, 0.0) + min(e1, 0.0)
        pos = max(e0, 0.0) + max(e1, 0.0)
        if code == 0:
            val = lam * neg + Lam * pos
        else:
            val = Lam * neg + lam * pos
    return coef, val


@nb.njit(parallel=True, cache=True)
def _residual(u, f, h, code, gamma, lam, Lam, eps):
    n0, n1 = u.shape
    out = np.zeros((n0, n1))
    for i in nb.prange(1, n0 - 1):
        for j in range(1, n1 - 1):
            coef, val = _local_op(u, i, j, h, code, gamma, lam, Lam, eps)
            out[i, j] = coef * val - f[i, j]
    return out


@nb.njit(parallel=True, cache=True)
def _sweep(u, unew, vel, f, h, code, gamma, lam, Lam, eps, base_dt, beta, local):
    n0, n1 = u.shape
    rowmax = np.zeros(n0)
    coefmax = np.zeros(n0)
    for i in nb.prange(1, n0 - 1):
        rm = 0.0
        cm = 0.0
        for j in range(1, n1 - 1):
            coef, val = _local_op(u, i, j, h, code, gamma, lam, Lam, eps)
            res = coef * val - f[i, j]
            if abs(res) > rm or res != res:
                rm = abs(res)
            if coef > cm:
                cm = coef
            if local:
                step = base_dt * (val - f[i, j] / coef)
            else:
                step = base_dt * res
            vel[i, j] = beta * vel[i, j] + step
            unew[i, j] = u[i, j] + vel[i, j]
        rowmax[i] = rm
        coefmax[i] = cm
    return rowmax.max(), coefmax.max()


def _lam_eff(spec):
    if spec.operator == "p_laplacian":
        return 1.0 + spec.params.gamma
    return spec.params.Lam


def _default_momentum(dom):
    # 1 - pi h / side: the unit-coefficient optimum is 1 - 2 pi h / side, and the
    # global step shrinks by Lambda_eff * max coef / cfl, which favours a larger factor
    side = max(b - a for a, b in zip(dom.lo, dom.hi))
    return max(0.0, 1.0 - math.pi * dom.h / side)


def boundary_interpolant(g):
    """Bilinearly blended (Coons) interpolant of the boundary values of ``g``."""
    dom = g.domain
    v = g.values
    x, y = dom.axes()
    s = ((x - x[0]) / (x[-1] - x[0]))[:, None]
    t = ((y - y[0]) / (y[-1] - y[0]))[None, :]
    left, right = v[0, :][None, :], v[-1, :][None, :]
    bottom, top = v[:, 0][:, None], v[:, -1][:, None]
    out = ((1 - s) * left + s * right + (1 - t) * bottom + t * top
           - ((1 - s) * (1 - t) * v[0, 0] + s * (1 - t) * v[-1, 0]
              + (1 - s) * t * v[0, -1] + s * t * v[-1, -1]))
    out[0, :], out[-1, :], out[:, 0], out[:, -1] = v[0, :], v[-1, :], v[:, 0], v[:, -1]
    return ScalarField(dom, out)


def _prolong(u_coarse, fine_dom, boundary):
    """Bilinear prolongation from the coarse grid onto ``fine_dom``; boundary reset."""
    c = u_coarse.values
    n0, n1 = fine_dom.shape
    out = np.empty((n0, n1))
    out[::2, ::2] = c
    out[1::2, ::2] = 0.5 * (c[:-1, :] + c[1:, :])
    out[::2, 1::2] = 0.5 * (c[:, :-1] + c[:, 1:])
    out[1::2, 1::2] = 0.25 * (c[:-1, :-1] + c[1:, :-1] + c[:-1, 1:] + c[1:, 1:])
    b = boundary.values
    out[0, :], out[-1, :], out[:, 0], out[:, -1] = b[0, :], b[-1, :], b[:, 0], b[:, -1]
    return ScalarField(fine_dom, out)


def residual(u, spec):
    """Interior defect ``coef(Du) Op(D^2u) - f``; zero on boundary nodes."""
    if u.domain != spec.domain:
        raise DomainError("solution and problem live on different grids")
    p = spec.params
    r = _residual(np.ascontiguousarray(u.values), np.ascontiguousarray(spec.f.values),
                  spec.domain.h, OPERATORS[spec.operator], p.gamma, p.lam, p.Lam, spec.eps)
    return ScalarField(spec.domain, r)


def relax_solve(spec, u0=None, nested=False, min_nested=17):
    """March ``u <- u + dt * R(u)`` to a steady state of the regularized equation.

    Each sweep is Jacobi style with ``dt = cfl h^2 / (4 Lambda_eff max coef)``
    recomputed from the previous sweep, accelerated by heavy-ball momentum.
    ``spec.local_step = True`` divides the defect by the local coefficient
    instead; it converges faster on mildly degenerate problems but loses
    stability near critical points on fine grids.

    Parameters
    ----------
    spec : ProblemSpec
    u0 : ScalarField, optional
        Initial guess; defaults to the boundary interpolant.  Boundary values
        are always taken from ``spec.boundary``.
    nested : bool
        Start from the prolonged solution of the problem on every second node
        (recursively, down to ``min_nested`` points per axis).

    Returns
    -------
    u : ScalarField
    report : SolveReport
        ``converged`` is False when ``max_iters`` sweeps did not bring the
        residual below ``tol_res`` or the iteration blew up.
    """
    t0 = time.perf_counter()
    dom = spec.domain
    if u0 is None:
        if nested and all((k - 1) % 2 == 0 and (k - 1) // 2 + 1 >= min_nested for k in dom.n_pts):
            uc, rep_c = relax_solve(spec.restrict(2), None, True, min_nested)
            u0 = _prolong(uc, dom, spec.boundary)
        else:
            u0 = boundary_interpolant(spec.boundary)
    elif u0.domain != dom:
        raise DomainError("initial guess lives on a different grid")

    p = spec.params
    code = OPERATORS[spec.operator]
    h = dom.h
    u = np.array(u0.values, dtype=float)
    b = spec.boundary.values
    u[0, :], u[-1, :], u[:, 0], u[:, -1] = b[0, :], b[-1, :], b[:, 0], b[:, -1]
    unew = u.copy()
    vel = np.zeros_like(u)
    f = np.ascontiguousarray(spec.f.values)
    beta = _default_momentum(dom) if spec.momentum is None else float(spec.momentum)
    base = spec.cfl * h * h / (4.0 * _lam_eff(spec))
    eps = spec.eps
    _, coefmax = _sweep(u, unew, vel, f, h, code, p.gamma, p.lam, p.Lam, eps,
                        0.0, beta, spec.local_step)
    res0 = None
    res = math.inf
    it = 0
    converged = False
    for it in range(spec.max_iters + 1):
        dt = base if spec.local_step else base / coefmax
        res, coefmax = _sweep(u, unew, vel, f, h, code, p.gamma, p.lam, p.Lam, eps,
                              dt, beta, spec.local_step)
        if res <= spec.tol_res:
            converged = True
            break
        if not math.isfinite(res) or (res0 is not None and res > 1e12 * max(res0, 1.0)):
            break
        if res0 is None:
            res0 = res
        u, unew = unew, u
    if not converged:
        res = float(np.max(np.abs(_residual(u, f, h, code, p.gamma, p.lam, p.Lam, eps))))
    report = SolveReport(it, float(res), converged, time.perf_counter() - t0)
    return ScalarField(dom, u), report


def singular_rhs(domain, s, scale=1.0, center=(0.0, 0.0)):
    """``scale * |x - center|^-s`` with the singular node replaced by its
    neighbours' average.

    Returns
    -------
    f : ScalarField
    flagged : ndarray of bool
        The replaced node(s).
    """
    c = np.asarray(center, dtype=float)
    r = np.sqrt(np.sum((domain.coords() - c) ** 2, axis=-1))
    with np.errstate(divide="ignore"):
        v = scale * np.where(r > 0, r, np.inf) ** (-s) if s > 0 else np.full(domain.shape, scale)
    flagged = r == 0
    for idx in np.argwhere(flagged):
        nbs = []
        for a in range(domain.dim):
            for d in (-1, 1):
                k = idx.copy()
                k[a] += d
                if 0 <= k[a] < domain.n_pts[a]:
                    nbs.append(v[tuple(k)])
        v[tuple(idx)] = float(np.mean(nbs))
    return ScalarField(domain, v), flagged


@dataclass
class RefineRow:
    h: float
    error: float
    order: float
    converged: bool
    note: str = ""


def refine_study(make_spec, reference, levels, annulus=None, nested=False):
    """Solve on each grid in ``levels`` and compare against ``reference``.

    Parameters
    ----------
    make_spec : callable
        ``make_spec(domain) -> ProblemSpec``.
    reference : callable
        ``reference(domain) -> ScalarField`` exact solution samples.
    levels : sequence of GridDomain
        Successively halved grids.
    annulus : callable, optional
        ``annulus(domain) -> RegionMask`` where errors are measured
        (default: all interior nodes).

    Returns
    -------
    list of RefineRow
        ``order = log2(err_prev / err)``; ``nan`` on the first row, ``inf``
        when both errors sit at the floating-point floor, and rows of
        nonconverged levels carry ``note='not converged'``.
    """
    rows = []
    prev = None
    for dom in levels:
        spec = make_spec(dom)
        u, rep = relax_solve(spec, nested=nested)
        ref = reference(dom)
        mask = annulus(dom).mask if annulus is not None else dom.interior()
        err = float(np.max(np.abs(u.values - ref.values)[mask]))
        note = "" if rep.converged else "not converged"
        if prev is None or not rep.converged:
            order = math.nan
        elif prev <= 1e-12 and err <= 1e-12:
            order = math.inf
        elif err == 0:
            order = math.inf
        else:
            order = math.log2(prev / err)
        rows.append(RefineRow(dom.h, err, order, rep.converged, note))
        prev = err if rep.converged else None
    return rows
