"""Quadratic inf- and sup-convolutions on the grid."""

import numpy as np

from ..errors import ConelabError
from ..field import ScalarField
from . import kernels

__all__ = ["inf_convolution", "sup_convolution"]


def inf_convolution(u, eps):
    """``u_eps(x0) = min_x u(x) + |x - x0|^2 / eps`` over all grid nodes.

    The minimum is exact over the lattice, so ``u_eps <= u`` and ``u_eps``
    increases towards ``u`` as ``eps`` decreases.
    """
    if not eps > 0:
        raise ConelabError("eps must be positive")
    dom = u.domain
    shape = dom.shape if dom.dim == 2 else (dom.shape[0], 1)
    pen = kernels.penalty_table(1.0 / eps, 2.0, dom.h, shape)
    w = np.ascontiguousarray(u.values.reshape(shape))
    return ScalarField(dom, kernels.min_plus(w, pen).reshape(dom.shape))


def sup_convolution(u, eps):
    """``-inf_convolution(-u, eps)``: the smallest grid majorant of that form."""
    return -inf_convolution(-u, eps)
