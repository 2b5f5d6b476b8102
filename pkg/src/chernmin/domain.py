"""Discretized Riemann surfaces in conformal coordinates.

A field on a :class:`SurfaceDomain` is an array of shape ``(C, n, n, ...)``:
one ``n x n`` block per chart (``C = 1`` for a torus, ``C = 3`` for the
sphere) followed by any number of component axes.  Operations act on the
first three axes only.

The torus is the rectangle ``C / (2 pi a Z + 2 pi b i Z)`` sampled on a
uniform periodic grid and differentiated spectrally.  The sphere is covered
by three charts of the Riemann sphere glued by a smooth partition of unity:

* ``B``  -- square in the coordinate ``w`` around 0,
* ``A``  -- the cylinder ``log w`` over the equatorial belt (periodic angle),
* ``C``  -- square in the coordinate ``1/w`` around infinity.

Non-periodic chart axes are differentiated with fourth-order finite
differences, periodic ones spectrally.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import CircleThroughZero, DegenerateConformalFactor


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def bump(r, inner=0.55, outer=0.85):
    """Radial cut-off equal to 1 for r <= inner and 0 for r >= outer."""
    return smooth_step((outer - np.asarray(r)) / (outer - inner))


@dataclass(frozen=True)
class Chart:
    """One grid patch.

    ``w`` holds the chart coordinate at each node, ``weights`` the quadrature
    weights including the partition of unity.  ``periodic`` flags the axes
    that wrap around (differentiated spectrally); ``to_sphere`` names the map
    from the chart coordinate to the global coordinate of the Riemann sphere
    (``"id"``, ``"inv"`` for ``1/w`` or ``"exp"`` for ``e^w``).
    """

    name: str
    w: np.ndarray
    du: float
    dv: float
    weights: np.ndarray
    periodic: tuple = (False, False)
    to_sphere: str = "id"

    @property
    def active(self):
        return self.weights > 1e-12

    def global_w(self, w=None):
        w = self.w if w is None else np.asarray(w)
        if self.to_sphere == "id":
            return w
        if self.to_sphere == "exp":
            return np.exp(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(w == 0, np.inf, 1.0 / np.where(w == 0, 1.0, w))

    def from_global(self, W):
        W = np.asarray(W, dtype=complex)
        if self.to_sphere == "id":
            return W
        if self.to_sphere == "exp":
            z = np.log(W)
            # land the angle inside the grid's v-range
            v0 = self.w[0, 0].imag
            return z.real + 1j * (v0 + np.mod(z.imag - v0, 2 * np.pi))
        return 1.0 / W


@dataclass(frozen=True)
class SurfaceDomain:
    genus: int
    n: int
    charts: tuple
    a: float = 1.0
    b: float = 1.0
    meta: dict = field(default_factory=dict)

    # -- construction -------------------------------------------------
    @classmethod
    def torus(cls, n, a=1.0, b=None):
        """Flat torus C/(2 pi a Z + 2 pi b i Z) on an ``n x n`` grid."""
        b = a if b is None else b
        du, dv = 2 * np.pi * a / n, 2 * np.pi * b / n
        u = du * np.arange(n)
        v = dv * np.arange(n)
        w = u[:, None] + 1j * v[None, :]
        wts = np.full((n, n), du * dv)
        chart = Chart("T", w, du, dv, wts, periodic=(True, True))
        return cls(genus=1, n=n, charts=(chart,), a=a, b=b)

    @classmethod
    def patch(cls, n, box=1.0, center=0.0):
        """A single square chart ``|Re(w - center)|, |Im(w - center)| <= box``
        with no topology, for local identity checks."""
        x = np.linspace(-box, box, n)
        h = x[1] - x[0]
        tw = np.ones(n)
        tw[0] = tw[-1] = 0.5
        w = center + x[:, None] + 1j * x[None, :]
        chart = Chart("P", w, h, h, np.outer(tw, tw) * h * h)
        return cls(genus=None, n=n, charts=(chart,), meta={"box": box, "patch": True})

    @classmethod
    def sphere(cls, n, inner=0.4, outer=0.65, box=0.7, margin=0.12):
        """Riemann sphere as three charts glued by a partition of unity.

        ``B`` is the square ``|Re w|, |Im w| <= box`` around ``w = 0``, ``C``
        the same square in ``1/w``, and ``A`` the cylinder ``log w`` over the
        annulus where neither cap has full weight.  The cap weights are
        ``psi(|w|)`` and ``psi(1/|w|)`` with a smooth cut-off ``psi`` that is 1
        below ``inner`` and 0 above ``outer``; the belt takes the rest.
        """
        if outer >= box:
            raise ValueError("cap support must fit inside the cap box")
        charts = []
        x = np.linspace(-box, box, n)
        h = x[1] - x[0]
        tw = np.ones(n)
        tw[0] = tw[-1] = 0.5
        cap_w = x[:, None] + 1j * x[None, :]
        cap_wts = np.outer(tw, tw) * h * h * bump(np.abs(cap_w), inner, outer)
        charts.append(Chart("B", cap_w, h, h, cap_wts, to_sphere="id"))
        # belt: s = log r over the support of the belt weight, angle periodic
        smax = -np.log(inner) + margin
        s = np.linspace(-smax, smax, n)
        ds = s[1] - s[0]
        dth = 2 * np.pi / n
        th = dth * np.arange(n) - np.pi
        zeta = s[:, None] + 1j * th[None, :]
        r = np.exp(s)[:, None] * np.ones((1, n))
        belt = 1.0 - bump(r, inner, outer) - bump(1.0 / r, inner, outer)
        belt_wts = tw[:, None] * ds * dth * belt
        charts.append(Chart("A", zeta, ds, dth, belt_wts, periodic=(False, True),
                            to_sphere="exp"))
        charts.append(Chart("C", cap_w.copy(), h, h, cap_wts.copy(), to_sphere="inv"))
        return cls(genus=0, n=n, charts=tuple(charts),
                   meta={"inner": inner, "outer": outer, "box": box})

    def round_factor(self, c=2.0):
        """Conformal factor of the metric ``c^2 |dW|^2 / (1 + |W|^2)^2`` in
        every sphere chart (invariant under ``W -> 1/W``; on the belt
        ``|dW| = |W| |dzeta|``)."""
        if self.genus != 0:
            raise ValueError("round_factor needs the sphere domain")
        out = []
        for ch in self.charts:
            if ch.to_sphere == "exp":
                out.append(c / (2 * np.cosh(ch.w.real)))
            else:
                out.append(c / (1 + np.abs(ch.w) ** 2))
        return np.stack(out)

    # -- basic accessors ----------------------------------------------
    @property
    def periodic(self):
        return self.genus == 1

    @property
    def shape(self):
        return (len(self.charts), self.n, self.n)

    @property
    def w(self):
        return np.stack([c.w for c in self.charts])

    @property
    def weights(self):
        return np.stack([c.weights for c in self.charts])

    @property
    def active(self):
        return self.weights > 1e-12

    @property
    def spacing(self):
        return max(max(c.du, c.dv) for c in self.charts)

    def zeros(self, *comp, dtype=complex):
        return np.zeros(self.shape + tuple(comp), dtype=dtype)

    def describe(self):
        if self.periodic:
            return {"genus": 1, "n": self.n, "a": self.a, "b": self.b}
        if self.meta.get("patch"):
            return {"patch": True, "n": self.n, "box": self.meta["box"]}
        return {"genus": 0, "n": self.n, "charts": [c.name for c in self.charts],
                "partition": [self.meta["inner"], self.meta["outer"]],
                "cap_box": self.meta["box"]}

    # -- differentiation ----------------------------------------------
    def partial(self, field, axis, local=False):
        """Derivative along the first (axis 0) or second (axis 1) chart coordinate.

        Periodic axes are differentiated spectrally unless ``local`` is set,
        in which case a periodic fourth-order stencil keeps the influence of
        a bad node (e.g. next to an excised point) within two cells.
        """
        field = np.asarray(field)
        out = np.empty(field.shape, dtype=np.result_type(field, float))
        for ci, c in enumerate(self.charts):
            h = c.du if axis == 0 else c.dv
            if c.periodic[axis]:
                out[ci] = _fd4_periodic(field[ci], axis, h) if local \
                    else _spectral(field[ci], axis, h)
            else:
                out[ci] = _fd4(field[ci], axis, h)
        return out

    def deriv(self, field, which, local=False):
        """Wirtinger derivative ``'w'`` (d/dw) or ``'wb'`` (d/dwbar)."""
        fu = self.partial(field, 0, local)
        fv = self.partial(field, 1, local)
        if which == "w":
            return 0.5 * (fu - 1j * fv)
        if which == "wb":
            return 0.5 * (fu + 1j * fv)
        raise ValueError(f"unknown derivative {which!r}")

    def laplacian0(self, field, local=False):
        """Flat coordinate Laplacian d_u^2 + d_v^2."""
        field = np.asarray(field)
        out = np.empty(field.shape, dtype=np.result_type(field, float))
        for ci, c in enumerate(self.charts):
            acc = 0.0
            for axis, h in ((0, c.du), (1, c.dv)):
                if c.periodic[axis] and local:
                    acc = acc + _fd4_periodic2(field[ci], axis, h)
                elif c.periodic[axis]:
                    acc = acc + _spectral(field[ci], axis, h, order=2)
                else:
                    acc = acc + _fd4(_fd4(field[ci], axis, h), axis, h)
            out[ci] = acc
        return out

    def laplacian(self, field, lam, local=False):
        """Metric Laplacian 4 d_w d_wbar / lam^2 (non-positive spectrum)."""
        lam = np.asarray(lam, dtype=float)
        check_conformal_factor(lam, self)
        L0 = self.laplacian0(field, local)
        return L0 / _pad(lam, L0) ** 2

    # -- quadrature ---------------------------------------------------
    def integrate(self, field, lam=None, mask=None):
        """Sum of weights * field * lam^2 over all charts."""
        f = np.asarray(field)
        wts = self.weights
        if lam is not None:
            wts = wts * np.asarray(lam) ** 2
        if mask is not None:
            wts = wts * mask
        f = np.where(_pad(wts, f) > 0, f, 0.0)
        return np.sum(_pad(wts, f) * f, axis=(0, 1, 2))

    def area(self, lam=None):
        return float(np.real(self.integrate(np.ones(self.shape), lam)))

    # -- locating points ----------------------------------------------
    def best_chart(self, W):
        """Chart index with the largest partition weight at global point ``W``."""
        if self.periodic or self.meta.get("patch"):
            return 0
        r = abs(W) if np.isfinite(W) else np.inf
        inner, outer = self.meta["inner"], self.meta["outer"]
        wb = float(bump(r, inner, outer)) if np.isfinite(r) else 0.0
        wc = float(bump(1.0 / r, inner, outer)) if r > 0 else 0.0
        return int(np.argmax([wb, 1.0 - wb - wc, wc]))

    # -- winding integrals --------------------------------------------
    def interpolate(self, values, chart, pts, order=3):
        """Bicubic interpolation of a real chart field at complex points."""
        c = self.charts[chart]
        w0 = c.w[0, 0]
        iu = (np.real(pts) - w0.real) / c.du
        iv = (np.imag(pts) - w0.imag) / c.dv
        mode = "grid-wrap" if any(c.periodic) else "nearest"
        return ndimage.map_coordinates(np.asarray(values[chart], dtype=float),
                                       [iu, iv], order=order, mode=mode)

    def winding_flux(self, magnitude, chart, center, radius=None, cells=6, samples=64):
        """Outward log-flux (1/2 pi) \\oint d_r log m ds around ``center``.

        ``magnitude`` is a non-negative field; the value is close to the
        vanishing order of ``magnitude`` at an isolated zero inside the
        circle.  The smooth square ``m^2`` is interpolated, never ``m``.
        """
        c = self.charts[chart]
        step = max(c.du, c.dv)
        if radius is None:
            radius = cells * step
        m2 = np.asarray(magnitude, dtype=float) ** 2
        delta = 0.25 * step
        theta = 2 * np.pi * np.arange(samples) / samples
        e = np.exp(1j * theta)
        floor = 1e-16
        vals = [self.interpolate(m2, chart, center + rr * e)
                for rr in (radius, radius + delta, radius - delta)]
        if min(np.min(v) for v in vals) <= floor:
            lo = np.sqrt(max(np.min(vals[0]), 0.0))
            raise CircleThroughZero(f"magnitude vanishes on the winding circle (min {lo:.2e})",
                                    context="domain.winding_flux")
        # secant in log r: exact for m ~ r^p, so no delta^2/r^2 bias
        ratio = np.log((radius + delta) / (radius - delta))
        return float(0.5 * np.mean(np.log(vals[1]) - np.log(vals[2])) / ratio)


def check_conformal_factor(lam, dom=None, tol=1e-10):
    lam = np.asarray(lam, dtype=float)
    vals = lam if dom is None else lam[dom.active] if lam.shape[:3] == dom.shape else lam
    if vals.size and np.min(vals) < tol:
        raise DegenerateConformalFactor(f"conformal factor {np.min(vals):.2e} below {tol:g}",
                                        context="domain")


def _pad(a, like):
    return a.reshape(a.shape + (1,) * (np.ndim(like) - a.ndim))


# fourth-order first-derivative stencils: centered, and one-sided near edges
_C4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_L0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_L1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _spectral(f, axis, h, order=1):
    """Spectral derivative of a periodic block along ``axis``."""
    n = f.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=h)
    if order == 1:
        if n % 2 == 0:
            k[n // 2] = 0.0
        mult = 1j * k
    else:
        mult = (1j * k) ** order
    shp = [1] * f.ndim
    shp[axis] = n
    out = np.fft.ifft(mult.reshape(shp) * np.fft.fft(f, axis=axis), axis=axis)
    return out if np.iscomplexobj(f) else out.real


def _fd4_periodic(f, axis, h):
    f = np.asarray(f)
    return (_C4[0] * np.roll(f, 2, axis) + _C4[1] * np.roll(f, 1, axis)
            + _C4[3] * np.roll(f, -1, axis) + _C4[4] * np.roll(f, -2, axis)) / h


def _fd4_periodic2(f, axis, h):
    f = np.asarray(f)
    return (-np.roll(f, 2, axis) + 16 * np.roll(f, 1, axis) - 30 * f
            + 16 * np.roll(f, -1, axis) - np.roll(f, -2, axis)) / (12 * h * h)


def _fd4(f, axis, h):
    f = np.moveaxis(np.asarray(f), axis, 0)
    out = np.empty(f.shape, dtype=np.result_type(f, float))
    out[2:-2] = (_C4[0] * f[:-4] + _C4[1] * f[1:-3] + _C4[3] * f[3:-1] + _C4[4] * f[4:])
    out[0] = np.tensordot(_L0, f[:5], axes=1)
    out[1] = np.tensordot(_L1, f[:5], axes=1)
    out[-1] = -np.tensordot(_L0, f[-1:-6:-1], axes=1)
    out[-2] = -np.tensordot(_L1, f[-1:-6:-1], axes=1)
    return np.moveaxis(out / h, 0, axis)
