"""Opening function K*(x), g(x), and decay curves of the untouched measure."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..errors import ConelabError
from ..field import RegionMask, ScalarField, measure
from .transform import touching_sets

__all__ = ["OpeningField", "DecayCurve", "opening_function", "decay_curve", "fit_decay"]


@dataclass(frozen=True, eq=False)
class OpeningField:
    """Smallest dyadic opening ``K*`` whose touching set contains each node.

    ``K_star`` and ``g`` are ``nan`` where ``censored`` (no level up to
    ``K_min * M**k_max`` touches).
    """

    domain: object
    gamma: float
    levels: np.ndarray
    K_star: np.ndarray
    censored: np.ndarray
    g: np.ndarray
    touch_masks: tuple

    def g_field(self):
        """``g`` as a ScalarField with censored nodes marked invalid (value 0)."""
        return ScalarField(self.domain, np.where(self.censored, 0.0, self.g), ~self.censored)

    def censored_fraction(self, region):
        m = region.mask
        return float(np.count_nonzero(self.censored & m)) / max(1, np.count_nonzero(m))


def _levels(K_min, M, k_max):
    if not (K_min > 0 and M > 1 and int(k_max) == k_max and k_max >= 1):
        raise ConelabError("need K_min > 0, M > 1 and an integer k_max >= 1")
    return K_min * float(M) ** np.arange(int(k_max) + 1)


def opening_function(u, V, gamma, K_min=0.25, M=2.0, k_max=16, search=None, tol_factor=None,
                     evaluate=None):
    """Per-node minimal opening over the levels ``K_min * M**k``, ``k = 0..k_max``.

    With ``evaluate`` given, only those nodes are classified; the rest come
    out censored.

    Returns
    -------
    OpeningField
        With ``g = K_star**(1/(1+gamma)) / 2``.
    """
    levels = _levels(K_min, M, k_max)
    search = RegionMask.full(u.domain) if search is None else search
    K_star = np.full(u.domain.shape, np.nan)
    masks = []
    for K in levels:
        tol = None if tol_factor is None else tol_factor * K * u.domain.h ** (1 + 1 / (1 + gamma))
        T = touching_sets(u, V, K, gamma, search, tol, evaluate=evaluate).both
        masks.append(T)
        new = T.mask & np.isnan(K_star)
        K_star[new] = K
    censored = np.isnan(K_star)
    g = 0.5 * np.power(K_star, 1.0 / (1.0 + gamma))
    return OpeningField(u.domain, float(gamma), levels, K_star, censored, g, tuple(masks))


@dataclass(frozen=True)
class DecayCurve:
    """Measures ``m_k = |B1 minus T_{M^k}|`` with a power-law fit ``m_k ~ t_k^-sigma``.

    ``sigma`` is ``inf`` when every level past ``k = 0`` is below the noise
    floor and ``nan`` when the fit is undefined (fewer than two levels above
    the floor otherwise).
    """

    M: float
    t: np.ndarray
    measures: np.ndarray
    noise_floor: float
    in_fit: np.ndarray
    sigma: float
    residual: float
    intercept: float = math.nan

    @property
    def sigma_flag(self):
        if math.isinf(self.sigma):
            return "infinite"
        if math.isnan(self.sigma):
            return "undefined"
        return "fitted"

    def is_nonincreasing(self, slack=0.0):
        return bool(np.all(np.diff(self.measures) <= slack))

    def rows(self):
        return [(k, float(t), float(m), bool(w))
                for k, (t, m, w) in enumerate(zip(self.t, self.measures, self.in_fit))]

    def summary(self):
        sig = self.sigma if math.isfinite(self.sigma) else None
        res = self.residual if math.isfinite(self.residual) else None
        return {"M": self.M, "sigma": sig, "sigma_flag": self.sigma_flag,
                "residual": res, "noise_floor": self.noise_floor}


def fit_decay(t, measures, noise_floor):
    """Least-squares fit of ``log m`` against ``log t`` over levels above the floor.

    Returns ``(sigma, residual, intercept, in_fit)`` where ``residual`` is the
    root-mean-square of the natural-log residuals.
    """
    t = np.asarray(t, dtype=float)
    m = np.asarray(measures, dtype=float)
    in_fit = m > noise_floor
    if m.size > 1 and not np.any(in_fit[1:]):
        return math.inf, math.nan, math.nan, in_fit
    if np.count_nonzero(in_fit) < 2:
        return math.nan, math.nan, math.nan, in_fit
    x = np.log(t[in_fit])
    y = np.log(m[in_fit])
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return float(-slope), float(np.sqrt(np.mean(res ** 2))), float(intercept), in_fit


def decay_curve(u, gamma, M=2.0, k_max=8, B1=None, V=None, search=None, opening=None):
    """Decay of ``|B1 minus T_t|`` over ``t = M**k``, ``k = 0..k_max``.

    ``V`` and ``search`` default to the whole grid.  A precomputed
    :class:`OpeningField` with matching levels may be passed as ``opening``;
    otherwise touch status is evaluated on ``B1`` only.
    """
    dom = u.domain
    full = RegionMask.full(dom)
    V = full if V is None else V
    B1 = full if B1 is None else B1
    if opening is None:
        search = full if search is None else search
        opening = opening_function(u, V, gamma, 1.0, M, k_max, search, evaluate=B1 & search)
    t = opening.levels
    meas = np.array([measure(B1 - T) for T in opening.touch_masks])
    floor = 5.0 * dom.cell_volume
    sigma, resid, icpt, in_fit = fit_decay(t, meas, floor)
    return DecayCurve(float(M), t, meas, floor, in_fit, sigma, resid, icpt)
