"""Pointwise nonlinear operators on gradients and Hessians.

Every function accepts a single point or a batch: vectors have shape
``(..., n)`` and matrices ``(..., n, n)``.  Results broadcast over the
leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConelabError, DegeneracyError
from .field import ScalarField

__all__ = [
    "DegeneracyParams", "RadialSolution", "sym_eigvals", "pucci", "degenerate_op",
    "stress", "stress_jacobian", "p_laplacian", "radial_solution", "radial_jet",
    "barrier", "barrier_hessian",
]


@dataclass(frozen=True)
class DegeneracyParams:
    """Degeneracy exponent ``gamma`` and ellipticity bounds ``lam <= Lam``."""

    gamma: float = 0.0
    lam: float = 1.0
    Lam: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "lam", "Lam"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConelabError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.gamma < 0:
            raise ConelabError("gamma must be nonnegative")
        if not 0 < self.lam <= self.Lam:
            raise ConelabError("need 0 < lam <= Lam")

    @property
    def alpha(self):
        return 1.0 / (1.0 + self.gamma)


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ConelabError("non-finite input")


def sym_eigvals(M):
    """Ascending eigenvalues of symmetric matrices.

    Sizes 1 and 2 use closed forms (``m -+ hypot((a - c)/2, b)``), so the
    spectrum of ``-M`` is exactly the negated spectrum of ``M``.
    """
    M = np.asarray(M, dtype=float)
    _finite(M)
    n = M.shape[-1]
    if n == 1:
        return M[..., 0, :].copy()
    if n == 2:
        a = M[..., 0, 0]
        c = M[..., 1, 1]
        b = 0.5 * (M[..., 0, 1] + M[..., 1, 0])
        m = 0.5 * (a + c)
        r = np.hypot(0.5 * (a - c), b)
        return np.stack([m - r, m + r], axis=-1)
    return np.linalg.eigvalsh(M)


def pucci(M, params, sign="plus"):
    """Pucci extremal operator ``P+`` or ``P-`` of symmetric ``M``.

    ``P+ = lam * (sum of negative eigenvalues) + Lam * (sum of positive ones)``
    and ``P-`` swaps the weights.
    """
    e = sym_eigvals(M)
    neg = np.sum(np.minimum(e, 0.0), axis=-1)
    pos = np.sum(np.maximum(e, 0.0), axis=-1)
    if sign == "plus":
        return params.lam * neg + params.Lam * pos
    if sign == "minus":
        return params.Lam * neg + params.lam * pos
    raise ConelabError(f"sign must be 'plus' or 'minus', got {sign!r}")


def _norm(p):
    return np.sqrt(np.sum(p * p, axis=-1))


def degenerate_op(p, M, params, sign="plus"):
    """``|p|^gamma * P(M)``; zero at ``p = 0`` when ``gamma > 0``."""
    p = np.asarray(p, dtype=float)
    _finite(p)
    return np.power(_norm(p), params.gamma) * pucci(M, params, sign)


def stress(p, gamma):
    """The stress map ``V(p) = |p|^gamma p``."""
    p = np.asarray(p, dtype=float)
    return np.power(_norm(p), gamma)[..., None] * p


def _unit(p, gamma):
    r = _norm(p)
    if gamma > 0 and np.any(r == 0):
        raise DegeneracyError("stress derivative is undefined at p = 0 for gamma > 0")
    safe = np.where(r > 0, r, 1.0)
    return p / safe[..., None], r


def stress_jacobian(p, M, gamma):
    """Derivative of ``V(Du)`` given ``Du = p`` and ``D^2u = M``.

    Returns
    -------
    full : ndarray
        ``|p|^gamma (I + gamma p_hat p_hat^T) M``.
    sym : ndarray
        ``(I + B) A (I + B) - B A B`` with ``A = |p|^gamma M`` and
        ``B = (gamma/2) p_hat p_hat^T``.

    Raises
    ------
    DegeneracyError
        If ``p = 0`` and ``gamma > 0``.
    """
    p = np.asarray(p, dtype=float)
    M = np.asarray(M, dtype=float)
    _finite(p, M)
    n = p.shape[-1]
    ph, r = _unit(p, gamma)
    eye = np.eye(n)
    P = ph[..., :, None] * ph[..., None, :]
    A = np.power(r, gamma)[..., None, None] * M
    full = (eye + gamma * P) @ A
    B = 0.5 * gamma * P
    IB = eye + B
    sym = IB @ A @ IB - B @ A @ B
    return full, sym


def p_laplacian(p, M, gamma):
    """Nondivergence p-Laplacian ``|p|^gamma (tr M + gamma <M p_hat, p_hat>)``.

    At ``p = 0`` the value is 0 for ``gamma > 0`` and ``tr M`` for ``gamma = 0``.
    """
    p = np.asarray(p, dtype=float)
    M = np.asarray(M, dtype=float)
    _finite(p, M)
    r = _norm(p)
    safe = np.where(r > 0, r, 1.0)
    ph = p / safe[..., None]
    quad = np.einsum("...i,...ij,...j->...", ph, M, ph)
    tr = np.trace(M, axis1=-2, axis2=-1)
    return np.power(r, gamma) * (tr + gamma * quad)


@dataclass(frozen=True)
class RadialSolution:
    """The profile ``c |x - center|^(1 + alpha)``."""

    c: float
    params: DegeneracyParams
    center: tuple = (0.0, 0.0)

    @property
    def beta(self):
        return 1.0 + self.params.alpha

    def constants(self, n):
        """``(f_plus, f_minus)`` for the profile in dimension ``n``."""
        if self.c == 0:
            raise ConelabError("radial profile needs c != 0")
        pr = self.params
        base = (abs(self.c) * self.beta) ** (1.0 + pr.gamma) * (n - 1 + pr.alpha)
        if self.c > 0:
            return pr.Lam * base, pr.lam * base
        return -pr.lam * base, -pr.Lam * base


def radial_jet(spec, x):
    """Value, gradient and Hessian of the radial profile at ``x`` (off-center)."""
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(spec.center, dtype=float)
    r = _norm(d)
    a = spec.params.alpha
    val = spec.c * r ** (1 + a)
    safe = np.where(r > 0, r, 1.0)
    dh = d / safe[..., None]
    grad = (spec.c * (1 + a) * r ** a)[..., None] * dh
    n = d.shape[-1]
    P = dh[..., :, None] * dh[..., None, :]
    hess = (spec.c * (1 + a) * safe ** (a - 1))[..., None, None] * (np.eye(n) + (a - 1) * P)
    return val, grad, hess


def radial_solution(spec, domain):
    """Sample the radial profile on ``domain``.

    Returns
    -------
    u : ScalarField
    f_plus, f_minus : float
        The constant values of ``|Du|^gamma P+-(D^2u)`` away from the center.
    """
    f_plus, f_minus = spec.constants(domain.dim)
    center = np.asarray(spec.center, dtype=float)[: domain.dim]
    r = np.sqrt(np.sum((domain.coords() - center) ** 2, axis=-1))
    u = ScalarField(domain, spec.c * r ** spec.beta)
    return u, f_plus, f_minus


def barrier_hessian(x, p_exp):
    """Hessian ``-|x|^(-p-2) (I - (p + 2) x_hat x_hat^T)`` of the barrier."""
    x = np.asarray(x, dtype=float)
    r = _norm(x)
    xh = x / r
    n = x.shape[-1]
    return -r ** (-p_exp - 2) * (np.eye(n) - (p_exp + 2) * np.outer(xh, xh))


def barrier(x, p_exp, params):
    """Barrier ``phi(x) = (|x|^-p - (3/4)^-p) / p`` for ``|x| >= 1/4``.

    Returns
    -------
    value : float
    grad : ndarray
        ``-|x|^(-p-2) x``.
    pucci_minus_hessian : float
        Closed form ``((p + 1) lam - (n - 1) Lam) / |x|^(p+2)``.
    """
    x = np.asarray(x, dtype=float)
    _finite(x)
    if int(p_exp) != p_exp or p_exp < 1:
        raise ConelabError("p_exp must be an integer >= 1")
    r = float(_norm(x))
    if r < 0.25:
        raise ConelabError("barrier formula holds only for |x| >= 1/4")
    p = int(p_exp)
    n = x.shape[-1]
    value = (r ** -p - 0.75 ** -p) / p
    grad = -r ** (-p - 2) * x
    pm = ((p + 1) * params.lam - (n - 1) * params.Lam) / r ** (p + 2)
    return value, grad, pm
