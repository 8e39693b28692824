"""Experiment orchestration: one kind per call, all files written at the end."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..contact import decay_curve, opening_function, seminorm_field, touching_sets
from ..cones import touch_tolerance
from ..errors import ConelabError
from ..field import RegionMask, ScalarField
from ..storage import csv_text, field_csv_text, field_to_bytes, json_text
from .checks import VerifyReport, density_check, normalize, w1delta_verify
from .fixtures import build_fixture, params_from_config, solve_problem
from .suite import builtin_suite

__all__ = ["run_experiment", "execute", "EXIT_OK", "EXIT_FAILED", "EXIT_ERROR"]

EXIT_OK, EXIT_FAILED, EXIT_ERROR = 0, 1, 2


def _ball(dom, radius):
    return RegionMask.ball(dom, np.zeros(dom.dim), radius)


def _prepared(cfg):
    fix = build_fixture(cfg)
    u, f = fix.u, fix.f
    meta = dict(fix.meta)
    if cfg.normalize:
        u, f, a = normalize(u, f, cfg.gamma, cfg.eps1, cfg.eps_pad)
        meta["normalization_factor"] = a
    return u, f, meta


def _solve(cfg, rep, files):
    u, f, srep, flagged = solve_problem(cfg)
    flagged = np.zeros(u.domain.shape, bool) if flagged is None else flagged
    rep.add("solver converged", srep.converged, srep.residual, cfg.tol_res, 0.0, "trivial")
    rep.extras["solve"] = srep.to_json()
    files["solution.fld"] = field_to_bytes(u)
    files["rhs.fld"] = field_to_bytes(f)
    files["solution.csv"] = field_csv_text(u.domain, {"u": u.values, "f": f.values,
                                                      "flagged": flagged})


def _contact(cfg, rep, files):
    u, _, meta = _prepared(cfg)
    dom = u.domain
    full = RegionMask.full(dom)
    alpha = 1.0 / (1.0 + cfg.gamma)
    tol = None if cfg.tol_factor is None else touch_tolerance(cfg.K, dom.h, alpha, cfg.tol_factor)
    ts = touching_sets(u, full, cfg.K, cfg.gamma, full, tol)
    neg = touching_sets(-u, full, cfg.K, cfg.gamma, full, tol)
    dual = int(np.count_nonzero(ts.plus.mask != neg.minus.mask))
    rep.add("upper set is the lower set of -u", dual == 0, dual, 0, 0.0, "trivial")

    op = opening_function(u, full, cfg.gamma, cfg.K_min, cfg.M, cfg.k_max, tol_factor=cfg.tol_factor)
    viol = sum(int(np.count_nonzero(a.mask & ~b.mask))
               for a, b in zip(op.touch_masks[:-1], op.touch_masks[1:]))
    rep.add("dyadic nesting violations", viol == 0, viol, 0, 0.0, "derived")

    rep.extras.update(meta)
    rep.extras.update({
        "K": cfg.K, "count_minus": ts.minus.count, "count_plus": ts.plus.count,
        "count_both": ts.both.count, "nodes": dom.size,
        "censored_fraction": op.censored_fraction(full),
        "levels": op.levels,
    })
    files["contact.csv"] = field_csv_text(dom, {"T_minus": ts.minus.mask, "T_plus": ts.plus.mask,
                                                "T": ts.both.mask})
    files["opening.csv"] = field_csv_text(dom, {"K_star": op.K_star, "g": op.g,
                                                "censored": op.censored})
    # censored nodes carry 0 in the binary container
    files["kstar.fld"] = field_to_bytes(ScalarField(dom, np.where(op.censored, 0.0, op.K_star)))


def _decay(cfg, rep, files):
    u, f, meta = _prepared(cfg)
    dom = u.domain
    B1 = _ball(dom, cfg.b1_radius)
    dc = decay_curve(u, cfg.gamma, cfg.M, cfg.k_max, B1)
    rep.add("decay curve nonincreasing", dc.is_nonincreasing(), float(np.max(np.diff(dc.measures))),
            0.0, 0.0, "derived")
    sig_ok = dc.sigma > cfg.sigma_min  # inf passes, nan fails
    rep.add("decay exponent above minimum", sig_ok, dc.sigma, cfg.sigma_min, cfg.sigma_min,
            "derived")
    rep.extras.update(meta)
    rep.extras["decay"] = dc.summary()
    files["decay.csv"] = csv_text(["k", "t", "measure", "in_fit"], dc.rows())

    if cfg.w1delta:
        if cfg.delta is not None:
            delta = cfg.delta
        elif math.isfinite(dc.sigma) and dc.sigma > 0:
            delta = 0.5 * dc.sigma * (1.0 + cfg.gamma)
        else:
            raise ConelabError("no fitted decay exponent to derive delta from; set delta")
        wrep = w1delta_verify(u, f, cfg.gamma, delta, _ball(dom, 0.5 * cfg.b1_radius),
                              cfg.drift_max)
        rep.checks.extend(wrep.checks)
        rep.extras["w1delta"] = wrep.extras


def _seminorm(cfg, rep, files):
    u, _, meta = _prepared(cfg)
    dom = u.domain
    alpha = 1.0 / (1.0 + cfg.gamma)
    radii = cfg.seminorm_radii or [2 * dom.h * 2 ** k for k in range(3)]
    region = _ball(dom, cfg.b1_radius)
    s = seminorm_field(u, alpha, radii, region)
    inside = region.mask & s.valid_mask()
    vals = s.values[inside]
    finite = bool(np.all(np.isfinite(vals)))
    rep.add("seminorm finite on evaluated nodes", finite and vals.size > 0, float(vals.size),
            1.0, provenance="trivial")
    rep.extras.update(meta)
    rep.extras.update({"radii": radii, "evaluated": int(vals.size),
                       "max": float(vals.max()) if vals.size else math.nan,
                       "mean": float(vals.mean()) if vals.size else math.nan})
    files["seminorm.fld"] = field_to_bytes(s)
    files["seminorm.csv"] = field_csv_text(dom, {"seminorm": s.values, "evaluated": inside})


def _verify(cfg, rep, files):
    sub = builtin_suite(params_from_config(cfg), cfg.samples, cfg.seed)
    rep.checks.extend(sub.checks)
    rep.extras.update(sub.extras)


def _density(cfg, rep, files):
    u, f, meta = _prepared(cfg)
    B1 = _ball(u.domain, cfg.b1_radius)
    frac, ok = density_check(u, f, cfg.gamma, cfg.density_eps, B1, cfg.density_threshold)
    rep.add("covered fraction of B1", ok, frac, cfg.density_threshold, cfg.density_threshold,
            "derived")
    rep.extras.update(meta)
    files["u_analyzed.fld"] = field_to_bytes(u)


_KINDS = {"solve": _solve, "contact": _contact, "decay": _decay, "seminorm": _seminorm,
          "verify": _verify, "density": _density}


def run_experiment(cfg):
    """Run one experiment in memory.

    Returns
    -------
    report : VerifyReport
    files : dict
        File name to ``bytes`` or ``str`` content, ``summary.json`` included.
    """
    rep = VerifyReport()
    files = {}
    _KINDS[cfg.kind](cfg, rep, files)
    summary = {"kind": cfg.kind, "config": cfg.values}
    summary.update(rep.to_json())
    files["summary.json"] = json_text(summary)
    return rep, files


def write_outputs(out_dir, files):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        data = files[name]
        if isinstance(data, str):
            (out / name).write_text(data, encoding="utf-8")
        else:
            (out / name).write_bytes(data)


def execute(cfg, out_dir, echo=print):
    """Run, print one line per check, write files; returns the exit status."""
    try:
        rep, files = run_experiment(cfg)
    except ConelabError as exc:
        echo(f"error: {exc}")
        return EXIT_ERROR
    for c in rep.checks:
        echo(c.line())
    write_outputs(out_dir, files)
    status = EXIT_OK if rep.passed else EXIT_FAILED
    echo(f"{cfg.kind}: {'passed' if rep.passed else 'FAILED'} "
         f"({sum(c.passed for c in rep.checks)}/{len(rep.checks)} checks)")
    return status
