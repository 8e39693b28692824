"""Brute-force reference computations shared by the tests."""

import functools

import numpy as np

from conelab.field import RegionMask


@functools.lru_cache(maxsize=8)
def _offsets_sq(shape):
    ij = np.indices(shape).reshape(len(shape), -1).T
    return np.sum((ij[:, None, :] - ij[None, :, :]) ** 2, axis=-1).astype(float)


def definition_scan(u, V, K, sign, alpha, search, tol, route="lattice"):
    """Touch mask and slide constants straight from the definition.

    ``route='lattice'`` forms squared distances as ``h^2 (di^2 + dj^2)`` from
    integer index offsets, so pair penalties round exactly like any other
    evaluation of that lattice formula; ``route='coords'`` subtracts node
    coordinates instead and agrees only up to rounding.
    """
    dom = u.domain
    w = u.values if sign == "below" else -u.values
    x = dom.coords().reshape(-1, dom.dim)
    wf = w.ravel()
    s_idx = np.nonzero(search.mask.ravel())[0]
    v_idx = np.nonzero(V.mask.ravel())[0]
    c = np.full(dom.size, np.inf)
    # rows: vertices, columns: search nodes
    if route == "lattice":
        k2 = _offsets_sq(dom.shape)[np.ix_(v_idx, s_idx)]
        pen = K / (1 + alpha) * ((dom.h * dom.h) * k2) ** ((1 + alpha) / 2)
    else:
        r = np.linalg.norm(x[v_idx][:, None, :] - x[s_idx][None, :, :], axis=-1)
        pen = K / (1 + alpha) * r ** (1 + alpha)
    vals = wf[s_idx][None, :] + pen
    c[v_idx] = vals.min(axis=1)
    touch = np.zeros(dom.size, bool)
    touch[s_idx[np.any(vals - c[v_idx][:, None] <= tol, axis=0)]] = True
    return RegionMask(dom, touch.reshape(dom.shape)), c.reshape(dom.shape)


def fixture_fields(dom, count, seed):
    """Smooth, rough, kinked and cone-shaped fields on ``dom``."""
    rng = np.random.default_rng(seed)
    x = dom.coords()
    r = np.linalg.norm(x, axis=-1)
    out = [np.zeros(dom.shape), x[..., 0].copy(), -0.5 * r ** 2, np.abs(x[..., 0]),
           -r ** 1.5, np.sin(3 * x[..., 0]) * (1 if dom.dim == 1 else np.cos(2 * x[..., -1]))]
    while len(out) < count:
        kind = len(out) % 3
        if kind == 0:
            out.append(rng.normal(scale=0.3, size=dom.shape))
        elif kind == 1:
            a = rng.normal(size=dom.dim)
            out.append(np.cos(x @ a * 2) + 0.1 * rng.normal(size=dom.shape))
        else:
            c = rng.uniform(-0.5, 0.5, size=dom.dim)
            out.append(-np.linalg.norm(x - c, axis=-1) ** rng.uniform(1.1, 2.0))
    return out[:count]
