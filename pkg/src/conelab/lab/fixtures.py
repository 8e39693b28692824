"""Input fields for experiments, built from an :class:`ExperimentConfig`."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..cones import Cone, cone_values
from ..field import GridDomain, ScalarField
from ..operators import DegeneracyParams, RadialSolution, radial_solution
from ..solver import ProblemSpec, relax_solve, singular_rhs

__all__ = ["Fixture", "grid_from_config", "params_from_config", "build_fixture", "solve_problem"]


@dataclass
class Fixture:
    u: ScalarField
    f: ScalarField
    meta: dict = dc_field(default_factory=dict)


def grid_from_config(cfg, n=None):
    return GridDomain.box(cfg.grid_lo, cfg.grid_hi, cfg.grid_n if n is None else n, cfg.dim)


def params_from_config(cfg):
    return DegeneracyParams(cfg.gamma, cfg.lam, cfg.Lam)


def _rhs(cfg, dom, params):
    if cfg.rhs == "zero":
        return ScalarField.constant(dom, 0.0), None
    if cfg.rhs == "constant":
        return ScalarField.constant(dom, cfg.rhs_value), None
    if cfg.rhs == "singular":
        f, flagged = singular_rhs(dom, cfg.rhs_s, cfg.rhs_value)
        return f, flagged
    rs = RadialSolution(cfg.fixture_c, params)
    u, fp, fm = radial_solution(rs, dom)
    value = fm if cfg.operator == "pucci_minus" else fp
    return ScalarField.constant(dom, value), None


def solve_problem(cfg, dom=None):
    """Solve the configured Dirichlet problem; returns ``(u, f, report)``."""
    dom = grid_from_config(cfg) if dom is None else dom
    params = params_from_config(cfg)
    f, flagged = _rhs(cfg, dom, params)
    if cfg.rhs == "radial":
        boundary, _, _ = radial_solution(RadialSolution(cfg.fixture_c, params), dom)
    else:
        boundary = ScalarField.constant(dom, 0.0)
    spec = ProblemSpec(params, cfg.operator, f, boundary, cfg.reg_eps, cfg.cfl,
                       cfg.tol_res, cfg.max_iters)
    u, rep = relax_solve(spec, nested=cfg.nested)
    return u, f, rep, flagged


def build_fixture(cfg, dom=None):
    """The field named by ``cfg.fixture`` and a matching right-hand side."""
    dom = grid_from_config(cfg) if dom is None else dom
    params = params_from_config(cfg)
    x = dom.coords()
    name = cfg.fixture
    meta = {"fixture": name}
    if name == "zero":
        return Fixture(ScalarField.constant(dom, 0.0), ScalarField.constant(dom, 0.0), meta)
    if name == "affine":
        slope = np.array([0.3, -0.2])[: dom.dim]
        u = ScalarField(dom, x @ slope + 0.1)
        return Fixture(u, ScalarField.constant(dom, 0.0), meta)
    if name == "quadratic":
        c = cfg.fixture_c
        r = np.sqrt(np.sum(x * x, axis=-1))
        # |Du|^gamma P+(c I) for u = c |x|^2 / 2
        weight = params.Lam if c > 0 else params.lam
        f = np.abs(c * r) ** params.gamma * weight * dom.dim * c
        return Fixture(ScalarField(dom, 0.5 * c * r * r), ScalarField(dom, f), meta)
    if name == "radial":
        rs = RadialSolution(cfg.fixture_c, params)
        u, fp, _ = radial_solution(rs, dom)
        meta.update({"f_plus": fp})
        return Fixture(u, ScalarField.constant(dom, fp), meta)
    if name == "cone":
        K = cfg.fixture_K
        cone = Cone("concave", K, np.zeros(dom.dim), 0.0, params.alpha)
        u = ScalarField(dom, cone_values(cone, x))
        f = ScalarField.constant(dom, -dom.dim * K ** (1.0 + params.gamma))
        meta.update({"cone": cone.to_json()})
        return Fixture(u, f, meta)
    u, f, rep, flagged = solve_problem(cfg, dom)
    meta.update({"solve": rep.to_json(),
                 "flagged_rhs_nodes": [] if flagged is None else np.argwhere(flagged).tolist()})
    return Fixture(u, f, meta)
