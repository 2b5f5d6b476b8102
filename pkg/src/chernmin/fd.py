"""Finite-difference kernels in real and Wirtinger form.

Points of the ambient chart are complex arrays of shape ``(..., 2)``.  A
derivative with respect to the four real directions ``(x1, y1, x2, y2)`` is
returned on a new axis placed right after the batch axes.
"""

import numpy as np

# central stencils: offsets and weights for the first derivative
_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]),
        np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


def real_directions():
    """Unit displacements in C^2 for the real coordinates x1, y1, x2, y2."""
    d = np.zeros((4, 2), dtype=complex)
    d[0, 0] = 1.0
    d[1, 0] = 1.0j
    d[2, 1] = 1.0
    d[3, 1] = 1.0j
    return d


def real_gradient(fun, z, h, order=4):
    """Derivatives of ``fun`` along the four real directions.

    ``fun`` maps points ``(..., 2)`` to arrays ``(..., *S)``; the result has
    shape ``(..., 4, *S)``.  ``h`` is a scalar or a per-point step.
    """
    if order not in _STENCILS:
        raise ValueError(f"unsupported stencil order {order}")
    offs, wts = _STENCILS[order]
    z = np.asarray(z, dtype=complex)
    nb = z.ndim - 1
    h = np.broadcast_to(np.asarray(h, dtype=float), z.shape[:-1])
    hz = h[..., None]
    out = []
    for d in real_directions():
        acc = None
        for o, c in zip(offs, wts):
            val = c * fun(z + o * hz * d)
            acc = val if acc is None else acc + val
        out.append(acc / h.reshape(h.shape + (1,) * (acc.ndim - nb)))
    return np.stack(out, axis=nb)


def to_wirtinger(dreal, axis):
    """Convert real-direction derivatives to (d/dz1, d/dz2, d/dzb1, d/dzb2)."""
    dreal = np.moveaxis(dreal, axis, 0)
    dx1, dy1, dx2, dy2 = dreal
    out = np.stack([
        0.5 * (dx1 - 1j * dy1),
        0.5 * (dx2 - 1j * dy2),
        0.5 * (dx1 + 1j * dy1),
        0.5 * (dx2 + 1j * dy2),
    ])
    return np.moveaxis(out, 0, axis)


def wirtinger_gradient(fun, z, h, order=4):
    """Wirtinger derivatives of ``fun`` on a new axis of length 4."""
    nb = np.asarray(z).ndim - 1
    return to_wirtinger(real_gradient(fun, z, h, order), nb)
