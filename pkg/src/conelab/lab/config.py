"""Experiment configuration: a flat ``key: value`` file.

The file is read as YAML but only a flat mapping is accepted: every value
must be a scalar or a list of scalars, ``#`` starts a comment, and unknown
keys are rejected.  See ``SCHEMA`` for keys, types and defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from pathlib import Path
import re

import yaml

from ..errors import ConfigError

__all__ = ["KINDS", "SCHEMA", "ExperimentConfig", "load_config", "parse_config"]

KINDS = ("solve", "contact", "decay", "seminorm", "verify", "density")

FIXTURES = ("zero", "affine", "quadratic", "radial", "cone", "solved")
OPERATOR_NAMES = ("pucci_plus", "pucci_minus", "p_laplacian")
RHS_KINDS = ("zero", "constant", "singular", "radial")


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 < v <= 1


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-6``)."""


_Loader.yaml_implicit_resolvers = {k: list(v) for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()}
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"))


# key: (type, default, validator or choices, help)
SCHEMA = {
    "kind": (str, None, KINDS, "experiment kind; must match the CLI kind if given"),
    "dim": (int, 2, (1, 2), "grid dimension"),
    "grid_lo": (float, -1.0, None, "lower box bound on every axis"),
    "grid_hi": (float, 1.0, None, "upper box bound on every axis"),
    "grid_n": (int, 65, lambda v: v >= 5, "points per axis"),
    "gamma": (float, 1.0, _nonneg, "degeneracy exponent"),
    "lam": (float, 1.0, _pos, "lower ellipticity constant"),
    "Lam": (float, 1.0, _pos, "upper ellipticity constant"),
    "fixture": (str, "solved", FIXTURES, "input field"),
    "fixture_c": (float, 1.0, None, "coefficient of the radial, cone or quadratic fixture"),
    "fixture_K": (float, 1.0, _pos, "opening of the cone fixture"),
    "operator": (str, "p_laplacian", OPERATOR_NAMES, "operator for solve and the solved fixture"),
    "rhs": (str, "singular", RHS_KINDS, "right-hand side for solving"),
    "rhs_value": (float, 1.0, None, "scale of the right-hand side"),
    "rhs_s": (float, 0.5, lambda v: 0 <= v < 2, "exponent s of |x|^-s"),
    "reg_eps": (float, None, _nonneg, "gradient regularization (default: h)"),
    "cfl": (float, 0.8, _unit, "pseudo-time step factor"),
    "tol_res": (float, 1e-7, _pos, "residual tolerance"),
    "max_iters": (int, 200000, lambda v: v >= 1, "sweep limit"),
    "nested": (bool, True, None, "coarse-to-fine initial guess"),
    "K": (float, 1.0, _pos, "opening for kind=contact"),
    "K_min": (float, 0.25, _pos, "smallest opening level"),
    "M": (float, 2.0, lambda v: v > 1, "ratio between opening levels"),
    "k_max": (int, 16, lambda v: v >= 1, "number of opening levels minus one"),
    "tol_factor": (float, None, _nonneg, "touch tolerance factor (default 4)"),
    "b1_radius": (float, 1.0, _pos, "radius of the ball B1 centred at the origin"),
    "eps1": (float, 1.0, _pos, "target L^n size of the normalized rhs"),
    "eps_pad": (float, 0.0, _nonneg, "padding added to the normalization factor"),
    "normalize": (bool, False, None, "normalize the fixture before analysis"),
    "density_eps": (float, 1.0, _pos, "maximal-function threshold"),
    "density_threshold": (float, 0.05, _unit, "required covered fraction"),
    "sigma_min": (float, 0.1, _nonneg, "minimum decay exponent"),
    "drift_max": (float, 0.2, _pos, "maximum relative refinement drift"),
    "w1delta": (bool, False, None, "also run the W^{1,delta} check in kind=decay"),
    "delta": (float, None, _pos, "integrability exponent (default from the fitted sigma)"),
    "seminorm_radii": (list, None, None, "radii for the pointwise seminorm"),
    "samples": (int, 2000, lambda v: v >= 1, "random samples per verify check"),
    "seed": (int, 0, _nonneg, "seed for randomized checks"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def with_updates(self, **kw):
        v = dict(self.values)
        v.update(kw)
        return ExperimentConfig(self.kind, v)


def _coerce(key, raw):
    typ, _, check, _ = SCHEMA[key]
    if raw is None:
        return None
    if typ is bool:
        if not isinstance(raw, bool):
            raise ConfigError(f"{key}: expected true/false")
        val = raw
    elif typ is int:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{key}: expected an integer")
        val = raw
    elif typ is float:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{key}: expected a number")
        val = float(raw)
        if not math.isfinite(val):
            raise ConfigError(f"{key}: must be finite")
    elif typ is str:
        if not isinstance(raw, str):
            raise ConfigError(f"{key}: expected a string")
        val = raw
    else:
        if not isinstance(raw, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw):
            raise ConfigError(f"{key}: expected a list of numbers")
        val = [float(x) for x in raw]
    if isinstance(check, tuple):
        if val not in check:
            raise ConfigError(f"{key}: {val!r} not in {check}")
    elif check is not None and not check(val):
        raise ConfigError(f"{key}: value {val!r} out of range")
    return val


def parse_config(text, kind=None):
    """Parse config text; ``kind`` (from the command line) fills or must match the file."""
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat key: value mapping")
    unknown = sorted(set(map(str, data)) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    values = {}
    for key, (_, default, _, _) in SCHEMA.items():
        raw = data.get(key, default)
        if isinstance(raw, dict):
            raise ConfigError(f"{key}: nested values are not allowed")
        values[key] = _coerce(key, raw)
    file_kind = values.pop("kind")
    if kind is not None and file_kind is not None and kind != file_kind:
        raise ConfigError(f"config kind {file_kind!r} does not match {kind!r}")
    kind = kind or file_kind
    if kind not in KINDS:
        raise ConfigError("experiment kind missing or unknown")
    if not values["grid_lo"] < values["grid_hi"]:
        raise ConfigError("grid_lo must be below grid_hi")
    if values["lam"] > values["Lam"]:
        raise ConfigError("lam must not exceed Lam")
    return ExperimentConfig(kind, values)


def load_config(path, kind=None):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, kind)
