"""The built-in verification suite run by ``conelab verify``."""

from __future__ import annotations


import numpy as np

from ..cones import Cone, cone_diff_vertex, cone_jet
from ..contact import slide_transform, slide_transform_reference
from ..field import GridDomain, RegionMask, ScalarField, gradient_central, hessian_central
from ..operators import (DegeneracyParams, RadialSolution, barrier, degenerate_op, p_laplacian,
                         pucci, radial_solution, stress, stress_jacobian, sym_eigvals)
from .checks import VerifyReport, left_surrogate, normalize

__all__ = ["random_symmetric", "builtin_suite"]


def random_symmetric(rng, count, n=2, scale=1.0):
    A = rng.normal(scale=scale, size=(count, n, n))
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def _unit_vectors(rng, count, n=2):
    p = rng.normal(size=(count, n))
    return p, p / np.linalg.norm(p, axis=-1, keepdims=True)


def builtin_suite(params, samples=2000, seed=0):
    """Closed-form identities and small oracle comparisons.

    Returns
    -------
    VerifyReport
    """
    rng = np.random.default_rng(seed)
    rep = VerifyReport()
    g = params.gamma

    M = random_symmetric(rng, samples)
    N = random_symmetric(rng, samples)
    err = np.max(np.abs(pucci(-M, params, "plus") + pucci(M, params, "minus")))
    rep.add("pucci duality", err <= 1e-12, err, 1e-12, 0.0, "trivial")
    lo = pucci(M, params, "minus") + pucci(N, params, "minus")
    mid = pucci(M + N, params, "minus")
    hi = pucci(M, params, "minus") + pucci(N, params, "plus")
    viol = max(float(np.max(lo - mid)), float(np.max(mid - hi)), 0.0)
    rep.add("pucci subadditivity chain", viol <= 1e-12, viol, 1e-12, 0.0, "paper")

    p, ph = _unit_vectors(rng, samples)
    a = rng.uniform(0.1, 10.0, size=(samples, 1))
    lhs = stress(a * p, g)
    rhs = a ** (1 + g) * stress(p, g)
    err = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)))
    rep.add("stress homogeneity", err <= 1e-12, err, 1e-12, 0.0, "trivial")

    dets = np.linalg.det(np.eye(2) + g * ph[:, :, None] * ph[:, None, :])
    err = float(np.max(np.abs(dets - (1 + g))))
    rep.add("det(I + gamma p p) = 1 + gamma", err <= 1e-12, err, 1e-12, 1 + g, "paper")

    full, sym = stress_jacobian(p, M, g)
    err = float(np.max(np.abs(p_laplacian(p, M, g) - np.trace(full, axis1=1, axis2=2))
                       / (1 + np.abs(p_laplacian(p, M, g)))))
    rep.add("p-Laplacian equals trace of stress Jacobian", err <= 1e-12, err, 1e-12, 0.0,
            "derived")
    err = float(np.max(np.abs(sym - 0.5 * (full + np.swapaxes(full, 1, 2)))
                       / (1 + np.abs(sym))))
    rep.add("symmetrized stress Jacobian", err <= 1e-12, err, 1e-12, 0.0, "paper")

    # cone Hessian in the stress metric: eigenvalues K^(1+gamma) {1, alpha}
    alpha = params.alpha
    worst_hi, worst_id = 0.0, 0.0
    for _ in range(200):
        K = rng.uniform(0.2, 5.0)
        x = rng.normal(size=2)
        jet = cone_jet(Cone("convex", K, (0.0, 0.0), 0.0, alpha), x)
        e = sym_eigvals(np.linalg.norm(jet.grad) ** g * jet.hess)
        scale = K ** (1 + g)
        worst_hi = max(worst_hi, float(np.max(e)) / scale)
        worst_id = max(worst_id, float(np.max(np.abs(np.sort(e) / scale - np.sort([1.0, alpha])))))
    rep.add("cone stress-Hessian bounded by 2 K^(1+gamma)", worst_hi <= 2.0, worst_hi, 2.0, 2.0,
            "paper")
    rep.add("cone stress-Hessian spectrum {1, alpha}", worst_id <= 1e-12, worst_id, 1e-12, 0.0,
            "derived")

    y0 = cone_diff_vertex(4.0, (0.0, 0.0), 1.0, (1.0, 0.0), 0.5)
    err = float(np.max(np.abs(y0 - np.array([-1.0 / 15.0, 0.0]))))
    rep.add("difference-cone vertex example", err <= 1e-15, err, 1e-15, -1 / 15, "paper")

    bp = DegeneracyParams(g, 1.0, 2.0)
    _, _, pm = barrier(np.array([0.5, 0.0]), 2, bp)
    rep.add("barrier Pucci value", abs(pm - 16.0) <= 1e-12, pm, 1e-12, 16.0, "paper")

    dom = GridDomain.box(-1.0, 1.0, 17, 2)
    xs = dom.coords()
    u = ScalarField(dom, np.sin(2 * xs[..., 0]) * np.cos(xs[..., 1]) + 0.3 * rng.normal(size=dom.shape))
    full_mask = RegionMask.full(dom)
    worst = 0.0
    for K in (0.25, 1.0, 4.0):
        A = slide_transform(u, full_mask, K, "below", alpha, full_mask)
        B = slide_transform_reference(u, full_mask, K, "below", alpha, full_mask)
        same = (np.array_equal(A.touch.mask, B.touch.mask)
                and np.array_equal(A.slide, B.slide)
                and np.array_equal(A.best_vertex, B.best_vertex))
        worst = max(worst, 0.0 if same else 1.0)
    rep.add("contact transform equals direct scan", worst == 0.0, worst, 0.0, 0.0, "derived")

    rp = DegeneracyParams(1.0, 1.0, 2.0)
    rd = GridDomain.box(-1.0, 1.0, 257, 2)
    ur, fp, _ = radial_solution(RadialSolution(1.0, rp), rd)
    Du = gradient_central(ur).values
    D2u = hessian_central(ur).matrices
    val = degenerate_op(Du, D2u, rp, "plus")
    r = np.linalg.norm(rd.coords(), axis=-1)
    ring = np.abs(r - 0.5) < rd.h
    rel = float(np.max(np.abs(val[ring] - 27 / 4) / (27 / 4)))
    rep.add("radial fixture constant by finite differences", rel <= 0.02, rel, 0.02, 27 / 4,
            "derived")

    ball = RegionMask.ball(dom, (0.0, 0.0), 0.5)
    us = ScalarField(dom, np.cos(xs[..., 0]) * np.exp(xs[..., 1]))
    base = left_surrogate(us, g, 0.75, ball)
    c = 3.0
    scaled = left_surrogate(us * c, g, 0.75, ball)
    err = abs(scaled / (c ** (1 + g) * base) - 1.0)
    rep.add("surrogate scales as a^(1+gamma)", err <= 1e-10, err, 1e-10, 0.0, "trivial")

    f = ScalarField(dom, rng.normal(size=dom.shape))
    pad = 0.5
    ut, ft, a = normalize(us, f, g, 0.1, pad)
    _, _, a2 = normalize(ut, ft, g, 0.1, pad)
    bound = 1 + pad * 17
    rep.add("re-normalization factor bound", a2 <= bound, a2, bound, bound, "derived")
    return rep
