"""Normalization, density and W^{1,delta} surrogate checks."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
import math

import numpy as np

from ..contact import maximal_function, opening_function, slide_transform
from ..errors import ConelabError, PreconditionError
from ..field import (RegionMask, ScalarField, VectorField, gradient_central, lp_norm,
                     measure, w1p_seminorm)
from ..operators import stress

__all__ = [
    "Check", "VerifyReport", "normalize", "density_check", "w1delta_verify",
    "stress_field", "left_surrogate", "PROVENANCE",
]

PROVENANCE = ("paper", "trivial", "derived")


@dataclass
class Check:
    """One verified quantity; ``reference`` is tagged with where it comes from."""

    name: str
    passed: bool
    value: float
    tolerance: float
    reference: float = math.nan
    provenance: str = "derived"

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ConelabError(f"unknown provenance tag {self.provenance!r}")
        self.passed = bool(self.passed)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: value={self.value:.6g} "
                f"reference={self.reference:.6g} tol={self.tolerance:.3g} ({self.provenance})")


@dataclass
class VerifyReport:
    checks: list = dc_field(default_factory=list)
    extras: dict = dc_field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, *args, **kwargs):
        c = Check(*args, **kwargs)
        self.checks.append(c)
        return c

    def to_json(self):
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "status": "pass" if c.passed else "fail",
                        "value": c.value, "tolerance": c.tolerance,
                        "reference": c.reference, "provenance": c.provenance}
                       for c in self.checks],
            "extras": self.extras,
        }


def normalize(u, f, gamma, eps1, eps_pad=0.0, region=None):
    """Scale ``(u, f)`` so that ``|u|_inf <= 1/16`` and ``|f|_{L^n} <= eps1``.

    ``a = 16 |u|_inf + (|f|_{L^n} / eps1)^(1/(1+gamma)) + eps_pad`` with
    norms over ``region`` (default: the whole grid) and ``n`` the grid
    dimension; returns ``(u/a, f/a^(1+gamma), a)``.
    """
    if not eps1 > 0:
        raise ConelabError("eps1 must be positive")
    if eps_pad < 0:
        raise ConelabError("eps_pad must be nonnegative")
    for fld in (u, f):
        if not np.all(np.isfinite(fld.values)):
            raise ConelabError("non-finite input")
    region = RegionMask.full(u.domain) if region is None else region
    n = u.domain.dim
    a = (16.0 * lp_norm(u, math.inf, region)
         + (lp_norm(f, n, region) / eps1) ** (1.0 / (1.0 + gamma)) + eps_pad)
    if not a > 0:
        raise ConelabError("u and f vanish and eps_pad = 0: no normalization exists")
    return (ScalarField(u.domain, u.values / a),
            ScalarField(f.domain, f.values / a ** (1.0 + gamma)), float(a))


def density_check(u, f, gamma, eps, B1, threshold=0.05, osc_region=None, radii=None):
    """Fraction of ``B1`` covered by ``T^-_1`` and ``{M(|f|^n) <= eps}``.

    Raises
    ------
    PreconditionError
        If the oscillation of ``u`` over ``osc_region`` (default: whole grid)
        exceeds 1/8.
    """
    dom = u.domain
    osc_region = RegionMask.full(dom) if osc_region is None else osc_region
    vals = u.values[osc_region.mask]
    osc = float(vals.max() - vals.min())
    if osc > 0.125:
        raise PreconditionError(f"oscillation {osc:.4g} exceeds 1/8")
    full = RegionMask.full(dom)
    alpha = 1.0 / (1.0 + gamma)
    T = slide_transform(u, full, 1.0, "below", alpha, full).touch
    fn = ScalarField(dom, np.abs(f.values) ** dom.dim)
    Mf = maximal_function(fn, full, radii)
    small = RegionMask(dom, Mf.values <= eps)
    frac = measure(B1 & T & small) / measure(B1)
    return float(frac), bool(frac >= threshold)


def stress_field(u, gamma):
    Du = gradient_central(u)
    return VectorField(u.domain, stress(Du.values, gamma), Du.valid)


def left_surrogate(u, gamma, delta, region):
    """``|D V(Du)|_{L^delta} + |V(Du)|_{L^delta}`` over ``region``."""
    V = stress_field(u, gamma)
    return w1p_seminorm(V, delta, region) + lp_norm(V, delta, region)


def _coarsen(fld, step=2):
    dom = fld.domain.subsample(step)
    sub = (slice(None, None, step),) * fld.domain.dim
    return ScalarField(dom, fld.values[sub])


def _scaled_ball(region, factor):
    if not region.is_ball():
        raise ConelabError("w1delta_verify needs a ball region")
    c = region.descriptor["center"]
    return RegionMask.ball(region.domain, c, factor * region.descriptor["radius"])


def w1delta_verify(u, f, gamma, delta, B_half, drift_max=0.2, censor_max=0.05,
                   u_coarse=None, opening_kwargs=None, opening=None):
    """Empirical check of the W^{1,delta} bound for ``V(Du)`` on ``B_half``.

    Left side: :func:`left_surrogate`.  Right side:
    ``|u|_inf(B1)^(1+gamma) + |f|_{L^n}(B1)`` with ``B1`` the concentric ball of
    twice the radius.  The left side is also evaluated on ``u_coarse``
    (default: every second node of ``u``) and the relative drift must stay
    below ``drift_max``.  Independently, ``|g|_{L^delta}(B_half)`` is
    computed from the opening function, built here with ``opening_kwargs``
    unless a precomputed ``opening`` of ``u`` is passed.

    Raises
    ------
    PreconditionError
        If more than ``censor_max`` of ``B_half`` has a censored opening.
    """
    if not delta > 0:
        raise ConelabError("delta must be positive")
    dom = u.domain
    B1 = _scaled_ball(B_half, 2.0)
    rep = VerifyReport()

    if opening is None:
        kw = dict(K_min=0.25, M=2.0, k_max=16)
        kw.update(opening_kwargs or {})
        opening = opening_function(u, RegionMask.full(dom), gamma, evaluate=B_half, **kw)
    elif opening.domain != dom:
        raise ConelabError("opening function lives on a different grid")
    op = opening
    cf = op.censored_fraction(B_half)
    if cf >= censor_max:
        raise PreconditionError(f"opening censored on {cf:.1%} of the half ball")
    g_norm = lp_norm(op.g_field(), delta, B_half)

    left = left_surrogate(u, gamma, delta, B_half)
    right = lp_norm(u, math.inf, B1) ** (1.0 + gamma) + lp_norm(f, dom.dim, B1)
    ratio = left / right if right > 0 else (0.0 if left == 0 else math.inf)

    if u_coarse is None:
        u_coarse = _coarsen(u)
    bh_c = RegionMask.ball(u_coarse.domain, B_half.descriptor["center"],
                           B_half.descriptor["radius"])
    left_c = left_surrogate(u_coarse, gamma, delta, bh_c)
    drift = abs(left - left_c) / left if left > 0 else abs(left_c)

    rep.add("left surrogate finite", math.isfinite(left), left, math.inf, provenance="trivial")
    rep.add("bound ratio finite", math.isfinite(ratio), ratio, math.inf, provenance="derived")
    rep.add("refinement drift", drift <= drift_max, drift, drift_max, 0.0, "derived")
    rep.add("g-route norm finite", math.isfinite(g_norm), g_norm, math.inf, provenance="derived")
    rep.extras.update({"left": left, "left_coarse": left_c, "right": right, "ratio": ratio,
                       "g_norm": g_norm, "censored_fraction": cf, "delta": delta})
    return rep
