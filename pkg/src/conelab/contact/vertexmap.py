"""Touch-point to vertex map and its Jacobian determinants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConelabError, EmptyRegionError
from ..field import RegionMask, gradient_central, hessian_central, measure
from ..operators import stress, stress_jacobian

__all__ = ["VertexMap", "vertex_map"]


@dataclass(frozen=True, eq=False)
class VertexMap:
    """Vertex map on the touch set of a ``below`` contact set.

    Attributes
    ----------
    touch_index : ndarray
        Flat indices of touch points.
    vertex : ndarray
        ``x + K^-(1+gamma) V(Du(x))`` per touch point.
    recorded : ndarray
        Coordinates of the vertex the contact transform recorded.
    dets : ndarray
        ``det(D_x y)`` per touch point.
    degenerate : ndarray of bool
        Touch points where ``|Du| <= grad_floor`` used the zero branch.
    hit : RegionMask
        Vertices recorded by at least one touch point.
    measure_ratio : float
        ``measure(hit) / measure(touch)``.
    area : float
        ``h^dim * sum(dets)``, the discrete area-formula image measure.
    """

    touch_index: np.ndarray
    vertex: np.ndarray
    recorded: np.ndarray
    dets: np.ndarray
    degenerate: np.ndarray
    hit: RegionMask
    measure_ratio: float
    area: float

    def displacement(self):
        """Distance between the formula vertex and the recorded vertex."""
        return np.linalg.norm(self.vertex - self.recorded, axis=-1)


def vertex_map(u, contact, gamma, grad_floor=None):
    """Map each touch point to its cone vertex and compute ``det(D_x y)``.

    ``D_x y = I + K^-(1+gamma) D(V(Du))`` with the stress Jacobian evaluated on
    central differences where ``|Du| > grad_floor`` (default ``10 h^alpha``).
    Below the floor and for ``gamma > 0`` the derivative of ``V(Du)`` is taken
    as zero, so the determinant is 1.
    """
    if contact.sign != "below":
        raise ConelabError("vertex_map expects a contact set with sign='below'")
    dom = u.domain
    if dom != contact.domain:
        raise ConelabError("field and contact set live on different grids")
    idx = np.nonzero(contact.touch.mask.ravel())[0]
    if idx.size == 0:
        raise EmptyRegionError("empty touch set")
    alpha = 1.0 / (1.0 + gamma)
    if grad_floor is None:
        grad_floor = 10.0 * dom.h ** alpha
    K = contact.K
    n = dom.dim
    Du = gradient_central(u).values.reshape(-1, n)[idx]
    D2u = hessian_central(u).matrices.reshape(-1, n, n)[idx]
    x = dom.coords().reshape(-1, n)[idx]
    scale = K ** (-(1.0 + gamma))
    y = x + scale * stress(Du, gamma)

    jac = np.broadcast_to(np.eye(n), (idx.size, n, n)).copy()
    deg = np.zeros(idx.size, bool)
    if gamma > 0:
        deg = np.linalg.norm(Du, axis=-1) <= grad_floor
    live = ~deg
    if np.any(live):
        full, _ = stress_jacobian(Du[live], D2u[live], gamma)
        jac[live] += scale * full
    dets = np.linalg.det(jac)

    rec_flat = contact.best_vertex.ravel()[idx]
    recorded = dom.coords().reshape(-1, n)[rec_flat]
    hit = np.zeros(dom.size, bool)
    hit[rec_flat] = True
    hit = RegionMask(dom, hit.reshape(dom.shape))
    ratio = measure(hit) / measure(contact.touch)
    area = float(dom.cell_volume * np.sum(dets))
    return VertexMap(idx, y, recorded, dets, deg, hit, float(ratio), area)
