"""Kähler angle, complex and anticomplex points, and their orders.

The Kähler angle is read off the gauge-invariant magnitudes

    cos(alpha/2) = |a_1|,    sin(alpha/2) = |a_1b|,

so nothing here depends on the choice of unitary coframe.  Complex points
are zeros of ``|a_1b|`` and anticomplex points zeros of ``|a_1|``; the
order of an isolated zero is the log-flux of tan(alpha/2) (resp. its
inverse) around it.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, optimize

from .errors import CircleThroughZero, NonIsolatedZeroSuspected


@dataclass
class SingularPoint:
    kind: str            # "complex" or "anticomplex"
    chart: int
    location: complex    # chart coordinate
    order: int = 0
    flux: float = float("nan")
    depth: float = 0.0   # refined minimum of the magnitude

    def as_dict(self):
        return {"kind": self.kind, "chart": self.chart,
                "location": [float(np.real(self.location)), float(np.imag(self.location))],
                "order": self.order, "flux": self.flux}


@dataclass
class AngleField:
    alpha: np.ndarray
    cos2: np.ndarray
    sin2: np.ndarray
    mag_complex: np.ndarray      # |a_1b| = sin(alpha/2)
    mag_anticomplex: np.ndarray  # |a_1|  = cos(alpha/2)
    singular_points: list = field(default_factory=list)
    classification: str = "generic"

    @property
    def P(self):
        return sum(p.order for p in self.singular_points if p.kind == "complex")

    @property
    def Q(self):
        return sum(p.order for p in self.singular_points if p.kind == "anticomplex")


def kahler_angle(jet):
    """Kähler angle field of a first-order jet (anything with ``a1``, ``a1b``)."""
    c = np.sqrt(np.sum(np.abs(jet.a1) ** 2, axis=-1))
    s = np.sqrt(np.sum(np.abs(jet.a1b) ** 2, axis=-1))
    alpha = 2.0 * np.arctan2(s, c)
    norm = c ** 2 + s ** 2
    return AngleField(alpha=alpha, cos2=c ** 2 / norm, sin2=s ** 2 / norm,
                      mag_complex=s / np.sqrt(norm), mag_anticomplex=c / np.sqrt(norm))


def classify(angle, dom, tol=1e-6, fraction=0.9):
    """'holomorphic', 'antiholomorphic' or 'generic' by the share of active
    nodes where the relevant magnitude is below ``tol``."""
    act = dom.active
    if np.mean(angle.mag_complex[act] < tol) > fraction:
        return "holomorphic"
    if np.mean(angle.mag_anticomplex[act] < tol) > fraction:
        return "antiholomorphic"
    return "generic"


def _label(mask, chart):
    """Connected components, merging across periodic edges."""
    lab, n = ndimage.label(mask)
    if n == 0:
        return lab, n
    parent = list(range(n + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for axis, per in enumerate(chart.periodic):
        if not per:
            continue
        a = np.take(lab, 0, axis=axis)
        b = np.take(lab, -1, axis=axis)
        for x, y in zip(a, b):
            if x and y:
                parent[find(x)] = find(y)
    roots = np.array([find(i) for i in range(n + 1)])
    lab = roots[lab]
    uniq = np.unique(lab[lab > 0])
    remap = np.zeros(n + 1, dtype=int)
    remap[uniq] = np.arange(1, len(uniq) + 1)
    return remap[lab], len(uniq)


def _local_minima(values, chart, valid):
    mode = ["wrap" if p else "nearest" for p in chart.periodic]
    filt = ndimage.minimum_filter(values, size=3, mode=mode)
    return valid & (values <= filt)


def _refine(dom, m2, chart, idx):
    """Minimize the bicubic interpolant of ``m^2`` near a grid minimum."""
    c = dom.charts[chart]
    w0 = c.w[idx]

    def fun(x):
        p = np.array([w0 + x[0] * c.du + 1j * x[1] * c.dv])
        return float(dom.interpolate(m2, chart, p)[0])

    res = optimize.minimize(fun, np.zeros(2), method="Nelder-Mead",
                            options={"xatol": 1e-4, "fatol": 1e-20, "maxiter": 400})
    x = np.clip(res.x, -1.5, 1.5)
    return w0 + x[0] * c.du + 1j * x[1] * c.dv, max(fun(x), 0.0)


def locate_singular_points(angle, dom, tol_detect=1e-3, radius_cells=6):
    """Candidate complex and anticomplex points.

    Raises NonIsolatedZeroSuspected for holomorphic or antiholomorphic
    subjects, or when a sublevel region is wider than the winding radius.
    """
    cls = classify(angle, dom)
    if cls != "generic":
        kind = "complex" if cls == "holomorphic" else "anticomplex"
        angle.classification = cls
        raise NonIsolatedZeroSuspected(f"immersion is {cls}", kind=kind, classification=cls,
                                       context="angle.locate_singular_points")
    found = []
    for kind, mag in (("complex", angle.mag_complex), ("anticomplex", angle.mag_anticomplex)):
        m2 = np.asarray(mag, dtype=float) ** 2
        for ci, c in enumerate(dom.charts):
            valid = c.active
            region, nreg = _label((mag[ci] < tol_detect) & valid, c)
            for k in range(1, nreg + 1):
                ii, jj = np.nonzero(region == k)
                span_u = _span(ii, dom.n, c.periodic[0])
                span_v = _span(jj, dom.n, c.periodic[1])
                if max(span_u, span_v) > radius_cells:
                    raise NonIsolatedZeroSuspected(
                        f"{kind} sublevel region spans {max(span_u, span_v)} cells",
                        kind=kind, classification="degenerate",
                        context="angle.locate_singular_points")
            # local minima whose refined interpolant dips below the threshold
            near = valid & (mag[ci] < max(50 * tol_detect, 0.2))
            minima = _local_minima(mag[ci], c, near)
            for idx in zip(*np.nonzero(minima)):
                loc, depth = _refine(dom, m2, ci, idx)
                if np.sqrt(depth) < tol_detect:
                    found.append(SingularPoint(kind, ci, loc, depth=float(np.sqrt(depth))))
    return _dedupe(found, dom, radius_cells)


def _span(idx, n, periodic):
    idx = np.unique(idx)
    if not periodic or len(idx) == 0:
        return int(idx.max() - idx.min()) if len(idx) else 0
    gaps = np.diff(np.concatenate([idx, [idx[0] + n]]))
    return int(n - gaps.max())


def _sphere_point(dom, p):
    W = dom.charts[p.chart].global_w(np.array(p.location))
    if not np.isfinite(W):
        return np.array([0.0, 0.0, 1.0])
    r2 = abs(W) ** 2
    return np.array([2 * W.real, 2 * W.imag, r2 - 1]) / (1 + r2)


def _dedupe(points, dom, radius_cells):
    """Merge detections of the same zero (several minima or charts)."""
    out = []
    for p in sorted(points, key=lambda q: q.depth):
        dup = False
        for q in out:
            if q.kind != p.kind:
                continue
            if dom.periodic:
                c = dom.charts[0]
                d = p.location - q.location
                du = np.mod(d.real + np.pi * dom.a, 2 * np.pi * dom.a) - np.pi * dom.a
                dv = np.mod(d.imag + np.pi * dom.b, 2 * np.pi * dom.b) - np.pi * dom.b
                close = np.hypot(du / c.du, dv / c.dv) <= radius_cells
            elif dom.meta.get("patch"):
                close = abs(p.location - q.location) <= radius_cells * dom.spacing
            else:
                h = dom.spacing
                close = np.linalg.norm(_sphere_point(dom, p) - _sphere_point(dom, q)) \
                    <= radius_cells * h
            if close:
                dup = True
                break
        if not dup:
            out.append(p)
    # on the sphere, evaluate each point in the chart where it is most interior
    if dom.genus == 0:
        for p in out:
            W = dom.charts[p.chart].global_w(np.array(p.location))
            best = dom.best_chart(complex(W))
            if best != p.chart:
                p.location = complex(dom.charts[best].from_global(W))
                p.chart = best
    return out


# outer radius relative to the base one; the flux of the smooth cofactor
# grows like r^2 and is extrapolated away between the two circles
_OUTER = 4.0 / 3.0


def point_orders(angle, candidates, dom, radius_cells=6):
    """Attach integer orders from winding fluxes; returns the completed field."""
    pts = []
    # tan(alpha/2) vanishes to the same order as sin(alpha/2) at a complex
    # point but does not saturate as alpha grows, which keeps the smooth
    # cofactor close to the r^2 form removed by the extrapolation
    with np.errstate(divide="ignore", invalid="ignore"):
        tan_half = angle.mag_complex / angle.mag_anticomplex
        cot_half = angle.mag_anticomplex / angle.mag_complex
    for p in candidates:
        mag = tan_half if p.kind == "complex" else cot_half
        try:
            f0 = dom.winding_flux(mag, p.chart, p.location, cells=radius_cells)
            f1 = dom.winding_flux(mag, p.chart, p.location, cells=radius_cells * _OUTER)
        except CircleThroughZero as exc:
            raise CircleThroughZero(f"{exc} (candidate {p.kind} at {p.location:.4g})",
                                    context="angle.point_orders") from None
        flux = (_OUTER ** 2 * f0 - f1) / (_OUTER ** 2 - 1.0)
        p.flux = flux
        p.order = max(int(round(flux)), 0)
        pts.append(p)
    angle.singular_points = pts
    return angle


def orders_consistent(angle, gap=0.2):
    """True when every singular point has a positive order within ``gap``."""
    return all(p.order >= 1 and abs(p.flux - p.order) < gap for p in angle.singular_points)


def analyze(jet, tol_detect=1e-3, radius_cells=6):
    """Angle, classification, singular points and orders in one call.  Non-
    generic subjects return with ``classification`` set and no points."""
    angle = kahler_angle(jet)
    try:
        cands = locate_singular_points(angle, jet.dom, tol_detect, radius_cells)
    except NonIsolatedZeroSuspected as exc:
        angle.classification = exc.classification
        return angle
    return point_orders(angle, cands, jet.dom, radius_cells)


@dataclass
class SyntheticJet:
    """Minimal jet carrying only ``a1``, ``a1b`` and a domain (for tests and
    planted-zero experiments)."""

    dom: object
    a1: np.ndarray
    a1b: np.ndarray


def synthetic_jet(dom, t, s=None):
    """Normalized jet with a_1 = (s, 0) and a_1b = (0, t) up to scale."""
    t = np.asarray(t, dtype=complex)
    s = np.ones_like(t) if s is None else np.asarray(s, dtype=complex)
    nrm = np.sqrt(np.abs(s) ** 2 + np.abs(t) ** 2)
    z = np.zeros_like(t)
    a1 = np.stack([s / nrm, z], -1)
    a1b = np.stack([z, t / nrm], -1)
    return SyntheticJet(dom, a1, a1b)
