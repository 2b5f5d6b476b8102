"""Conformal immersions of a discretized surface into a Hermitian surface.

An immersion is sampled as the chart values ``z`` together with the
Wirtinger derivatives ``z_w``, ``z_wb`` and ``z_{w wb}`` at every node.  The
first-order jet splits the pulled-back coframe as

    f* omega^i = a^i_1 phi + a^i_1b phib,    phi = lam dw,

with ``lam`` fixed by sum |a|^2 = 1.  Covariant differentiation along the
surface uses the surface connection ``rho = -i d_w log(lam) dw + c.c.`` and
the pulled-back Chern connection.

Throughout, vector-valued fields carry the frame index last: ``a1[..., i]``
is ``a^i_1``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sp
from scipy import ndimage

from . import ambient as amb
from .domain import SurfaceDomain, check_conformal_factor
from .errors import ConfigError, NotConformal, NotImmersive


# ---------------------------------------------------------------------------
# samples

@dataclass
class Samples:
    """Chart values of an immersion and its Wirtinger derivatives, each of
    shape ``(C, n, n, 2)``."""

    z: np.ndarray
    zw: np.ndarray
    zwb: np.ndarray
    zwwb: np.ndarray
    charts: list = field(default_factory=list)


_W, _WB = sp.symbols("w wb")


def _lambdify(exprs):
    """Value, d/dw, d/dwb and d^2/dw dwb of a list of expressions in w, wb."""
    out = []
    for e in exprs:
        e = sp.sympify(e)
        ew, ewb = sp.diff(e, _W), sp.diff(e, _WB)
        ewwb = sp.diff(ew, _WB)
        out.append([sp.lambdify((_W, _WB), x, "numpy") for x in (e, ew, ewb, ewwb)])

    def evaluate(w):
        w = np.asarray(w, dtype=complex)
        wb = np.conj(w)
        res = np.zeros((4,) + w.shape + (len(out),), dtype=complex)
        for k, fns in enumerate(out):
            for d, fn in enumerate(fns):
                res[d, ..., k] = fn(w, wb)
        return res

    return evaluate


def samples_from_parts(dom, Z, growth=None, drift=None):
    """Torus samples ``z = exp(g_u u + g_v v) Z + d_u u + d_v v`` with a
    periodic part ``Z`` (shape ``(1, n, n, 2)``) differentiated spectrally.

    ``growth`` and ``drift`` are ``(2, 2)`` arrays indexed ``[direction,
    component]`` with direction 0 = u and 1 = v.
    """
    Z = np.asarray(Z, dtype=complex)
    g = np.zeros((2, 2), dtype=complex) if growth is None else np.asarray(growth, dtype=complex)
    d = np.zeros((2, 2), dtype=complex) if drift is None else np.asarray(drift, dtype=complex)
    w = dom.w[..., None]
    u, v = w.real, w.imag
    E = np.exp(g[0] * u + g[1] * v)
    kap = 0.5 * (g[0] - 1j * g[1])
    kapb = 0.5 * (g[0] + 1j * g[1])
    Zw, Zwb = dom.deriv(Z, "w"), dom.deriv(Z, "wb")
    Zwwb = 0.25 * dom.laplacian0(Z)
    z = E * Z + d[0] * u + d[1] * v
    zw = E * (kap * Z + Zw) + 0.5 * (d[0] - 1j * d[1])
    zwb = E * (kapb * Z + Zwb) + 0.5 * (d[0] + 1j * d[1])
    zwwb = E * (kapb * (kap * Z + Zw) + kap * Zwb + Zwwb)
    return Samples(z, zw, zwb, zwwb)


# ---------------------------------------------------------------------------
# immersion catalogue

@dataclass
class ImmersionMap:
    """A named immersion.  Torus maps give chart coordinates ``z(w, wb)``
    directly; sphere maps give homogeneous coordinates in CP^2 near ``w = 0``
    (``hom0``) and near ``w = infinity`` (``hom_inf``, in the coordinate
    ``1/w``)."""

    name: str
    metric: str
    genus: int
    exprs: Optional[list] = None
    hom0: Optional[list] = None
    hom_inf: Optional[list] = None
    lattice: tuple = (1.0, 1.0)
    params: dict = field(default_factory=dict)
    conformal: bool = True
    sampler: Optional[Callable] = None

    def domain(self, n):
        if self.genus == 1:
            return SurfaceDomain.torus(n, *self.lattice)
        if self.genus is None:
            return SurfaceDomain.patch(n, self.params.get("box", 1.0),
                                       self.params.get("center", 0.0))
        return SurfaceDomain.sphere(n)

    def ambient(self):
        return amb.get_metric(self.metric)

    def sample(self, dom):
        if self.sampler is not None:
            return self.sampler(dom)
        if self.genus in (1, None):
            ev = _lambdify(self.exprs)(dom.w[0])
            return Samples(*(ev[k][None] for k in range(4)))
        return _sample_sphere(self, dom)


@lru_cache(maxsize=1)
def _chart_candidates():
    """Unitary changes of homogeneous coordinates tried for each sphere chart."""
    cands = [np.eye(3)[list(p)] for p in ((0, 1, 2), (1, 0, 2), (2, 0, 1))]
    rng = np.random.default_rng(20240611)
    for _ in range(12):
        M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        Q, _ = np.linalg.qr(M)
        cands.append(Q)
    return tuple(cands)


def homogeneous_jets(hom0, hom_inf, dom):
    """Homogeneous coordinates and their w-jets on every sphere chart,
    each of shape ``(4, n, n, 3)`` (value, d/dw, d/dwb, d^2/dw dwb)."""
    ev0 = _lambdify(hom0)
    evi = _lambdify(hom_inf)
    out = []
    for c in dom.charts:
        if c.to_sphere == "inv":
            F = evi(c.w)
        elif c.to_sphere == "exp":
            w = np.exp(c.w)[..., None]
            F = ev0(np.exp(c.w))
            F = np.stack([F[0], w * F[1], np.conj(w) * F[2], np.abs(w) ** 2 * F[3]])
        else:
            F = ev0(c.w)
        out.append(F)
    return out


def choose_affine_charts(dom, Fs):
    """Per chart, the candidate unitary whose affine chart stays farthest
    from its hyperplane at infinity over the weighted support (plus a
    stencil margin), while remaining finite on the whole box."""
    chosen = []
    for c, F in zip(dom.charts, Fs):
        near = ndimage.binary_dilation(c.active, iterations=8)
        best, score = None, -1.0
        for k, U in enumerate(_chart_candidates()):
            ratio = np.abs(F[0] @ U[0]) / np.linalg.norm(F[0], axis=-1)
            if np.min(ratio) < 1e-6:
                continue
            sc = np.min(ratio[near])
            if sc > score + 1e-9:
                best, score = k, sc
        if best is None:
            raise NotImmersive(f"no affine chart covers sphere chart {c.name}",
                               context="immersion.sample")
        chosen.append({"chart": c.name, "candidate": best, "min_ratio": float(score)})
    return chosen


def samples_from_homogeneous(dom, Fs, chosen=None):
    """Affine samples from homogeneous jets (quotient rule per chart)."""
    chosen = choose_affine_charts(dom, Fs) if chosen is None else chosen
    parts = []
    for F, ch in zip(Fs, chosen):
        U = _chart_candidates()[ch["candidate"]]
        X = np.einsum("...k,jk->...j", F, U)  # (4, n, n, 3)
        Gv = X[..., 1:]
        q = 1.0 / X[0, ..., 0]
        qw = -X[1, ..., 0] * q ** 2
        qwb = -X[2, ..., 0] * q ** 2
        qwwb = 2 * X[1, ..., 0] * X[2, ..., 0] * q ** 3 - X[3, ..., 0] * q ** 2
        q, qw, qwb, qwwb = (a[..., None] for a in (q, qw, qwb, qwwb))
        z = Gv[0] * q
        zw = Gv[1] * q + Gv[0] * qw
        zwb = Gv[2] * q + Gv[0] * qwb
        zwwb = Gv[3] * q + Gv[1] * qwb + Gv[2] * qw + Gv[0] * qwwb
        parts.append((z, zw, zwb, zwwb))
    arr = [np.stack([p[k] for p in parts]) for k in range(4)]
    return Samples(*arr, charts=chosen)


def _sample_sphere(f, dom):
    return samples_from_homogeneous(dom, homogeneous_jets(f.hom0, f.hom_inf, dom))


def _pythagorean(c):
    cf = Fraction(c).limit_denominator(10000)
    s2 = 1 - cf * cf
    sf = Fraction(int(round(np.sqrt(float(s2.numerator)))), int(round(np.sqrt(float(s2.denominator)))))
    if sf * sf != s2:
        raise ConfigError(f"slanted torus needs rational c and sqrt(1-c^2); got c={c}",
                          context="immersion.catalogue")
    q = int(np.lcm(cf.denominator, sf.denominator))
    return cf, sf, q


def slanted_flat_torus(c=Fraction(3, 5)):
    """f(w) = (c w, s wbar) into the flat 4-torus, s = sqrt(1 - c^2)."""
    cf, sf, q = _pythagorean(c)
    exprs = [sp.Rational(cf.numerator, cf.denominator) * _W,
             sp.Rational(sf.numerator, sf.denominator) * _WB]
    return ImmersionMap("slanted-flat-torus", "flat-torus", 1, exprs=exprs,
                        lattice=(float(q), float(q)), params={"c": float(cf)})


def clifford_torus():
    """[e^{i x} : e^{i y} : 1] on the hexagonal lattice, as a rectangle."""
    x = (_W + _WB) / 2
    y = (_W - _WB) / (2 * sp.I)
    up = x + y / sp.sqrt(3)
    vp = x - y / sp.sqrt(3)
    exprs = [sp.exp(sp.I * up), sp.exp(sp.I * vp)]
    return ImmersionMap("clifford-torus", "fubini-study", 1, exprs=exprs,
                        lattice=(1.0, float(np.sqrt(3.0))))


def _hopf_b(a=1.0):
    return 2 * np.pi * a / np.log(2.0)


def hopf_elliptic(c=1.0):
    """(c e^{w/b}, s e^{wbar/b}) in the Hopf surface, b = 2 pi / log 2."""
    c = float(c)
    s = float(np.sqrt(max(0.0, 1.0 - c * c)))
    b = _hopf_b()
    exprs = [c * sp.exp(_W / b), s * sp.exp(_WB / b)]
    return ImmersionMap("hopf-elliptic", "hopf", 1, exprs=exprs, lattice=(1.0, b),
                        params={"c": c})


def random_trig(seed=0, degree=2, amplitude=0.05, c=0.8, fine=1024):
    """Random conformal torus ``e^{u/b} sigma(v)`` in the Hopf surface.

    The Hopf metric is the product metric on ``R x S^3`` (radial coordinate
    ``log|z|``), so the map is conformal as soon as ``sigma`` is a closed
    curve on ``S^3`` with constant speed ``1/b``.  ``sigma`` is a random
    trigonometric perturbation of the elliptic-curve profile, pushed to the
    sphere and reparametrized proportionally to arclength; ``amplitude = 0``
    gives ``hopf-elliptic``.
    """
    rng = np.random.default_rng(seed)
    s = float(np.sqrt(1 - c * c))
    tau = 2 * np.pi * np.arange(fine) / fine
    gam = np.stack([c * np.exp(1j * tau), s * np.exp(-1j * tau)], -1)
    for k in range(2):
        for m in range(-degree, degree + 1):
            coef = amplitude * complex(rng.normal(), rng.normal()) / (1 + m * m)
            gam[:, k] += coef * np.exp(1j * m * tau)
    sig = gam / np.linalg.norm(gam, axis=-1, keepdims=True)
    freq = np.fft.fftfreq(fine, 1.0 / fine)
    sig_hat = np.fft.fft(sig, axis=0) / fine
    speed = np.linalg.norm(np.fft.ifft(1j * freq[:, None] * sig_hat * fine, axis=0), axis=-1)
    sp_hat = np.fft.fft(speed) / fine
    mean_speed = float(sp_hat[0].real)
    alpha = 1.0 / _hopf_b()
    b_lat = mean_speed / alpha          # curve length / (2 pi alpha)
    nz = freq != 0
    arc_hat = np.zeros_like(sp_hat)
    arc_hat[nz] = sp_hat[nz] / (1j * freq[nz])

    def series(coef, t):
        return np.exp(1j * np.outer(t, freq)) @ coef

    def sampler(dom):
        v = dom.charts[0].w[0, :].imag
        target = alpha * v
        t = target / mean_speed
        for _ in range(50):
            arc = mean_speed * t + np.real(series(arc_hat, t) - series(arc_hat, np.zeros(1)))
            step = (arc - target) / np.real(series(sp_hat, t))
            t = t - step
            if np.max(np.abs(step)) < 1e-15:
                break
        prof = series(sig_hat, t)                       # (n, 2)
        Z = np.broadcast_to(prof[None, None], (1, dom.n, dom.n, 2)).copy()
        growth = np.array([[alpha, alpha], [0.0, 0.0]])
        return samples_from_parts(dom, Z, growth=growth)

    return ImmersionMap("random-trig", "hopf", 1, lattice=(1.0, b_lat),
                        params={"seed": int(seed), "degree": int(degree),
                                "amplitude": float(amplitude), "c": float(c)},
                        sampler=sampler)


_WC, _WCB = _W, _WB  # the chart at infinity reuses the symbols for 1/w


def holomorphic_line():
    return rational_curve(1, name="holomorphic-line")


def rational_curve(d=1, name="rational-curve"):
    """Degree-d rational normal curve [1 : w : ... : w^d] (d = 1, 2)."""
    d = int(d)
    if d == 1:
        hom0 = [1, _W, 0]
        hinf = [_WC, 1, 0]
    elif d == 2:
        hom0 = [1, _W, _W ** 2]
        hinf = [_WC ** 2, _WC, 1]
    else:
        raise ConfigError("rational-curve supports degree 1 or 2", context="immersion.catalogue")
    return ImmersionMap(name, "fubini-study", 0, hom0=hom0, hom_inf=hinf, params={"d": d})


def veronese_f1():
    """Middle map of the Veronese harmonic sequence, a totally real sphere."""
    r2 = _W * _WB
    hom0 = [-2 * _WB, sp.sqrt(2) * (1 - r2), 2 * _W]
    rc2 = _WC * _WCB
    hinf = [-2 * _WC, sp.sqrt(2) * (rc2 - 1), 2 * _WCB]
    return ImmersionMap("veronese-f1", "fubini-study", 0, hom0=hom0, hom_inf=hinf)


def local_patch(exprs, metric="flat", box=1.0, center=0.0, name="patch"):
    """An immersed square ``z(w, wb)`` with no global topology."""
    return ImmersionMap(name, metric, None, exprs=list(exprs),
                        params={"box": float(box), "center": complex(center)})


def minimal_graph_patch(shift=0.3, box=1.0):
    """(w, conj(w^2/2 + shift w)) in flat C^2: minimal, generic, with a
    single complex point of order one at ``w = -shift``."""
    h = _WB ** 2 / 2 + shift * _WB
    return local_patch([_W, h], "flat", box=box, name="minimal-graph")


CATALOGUE = {
    "slanted-flat-torus": slanted_flat_torus,
    "holomorphic-line": holomorphic_line,
    "rational-curve": rational_curve,
    "clifford-torus": clifford_torus,
    "veronese-f1": veronese_f1,
    "hopf-elliptic": hopf_elliptic,
    "random-trig": random_trig,
}


def get_immersion(name, **params):
    try:
        factory = CATALOGUE[name]
    except KeyError:
        raise ConfigError(f"unknown immersion {name!r}; known: {sorted(CATALOGUE)}",
                          context="immersion.catalogue") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# jets

@dataclass
class PullbackJet:
    dom: SurfaceDomain
    metric: amb.MetricField
    samples: Samples
    A: np.ndarray
    lam: np.ndarray
    a1: np.ndarray
    a1b: np.ndarray
    conformality: np.ndarray
    isometry: np.ndarray
    W: np.ndarray
    L: np.ndarray
    Wpb_w: np.ndarray
    Wpb_wb: np.ndarray
    flags: dict = field(default_factory=dict)
    a11: Optional[np.ndarray] = None
    a11b: Optional[np.ndarray] = None
    a1b1: Optional[np.ndarray] = None
    a1b1b: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def active(self):
        return self.dom.active

    def pull1(self, v):
        """Pull back ambient 1-forms ``v[..., 4]`` to (dw, dwb) coefficients."""
        s = self.samples
        zw, zwb = s.zw, s.zwb
        ex = (slice(None),) * 3 + (None,) * (v.ndim - 4)
        zw, zwb = zw[ex], zwb[ex]
        pw = np.sum(v[..., :2] * zw, -1) + np.sum(v[..., 2:] * np.conj(zwb), -1)
        pwb = np.sum(v[..., :2] * zwb, -1) + np.sum(v[..., 2:] * np.conj(zw), -1)
        return pw, pwb

    def pull2(self, F):
        """dw ^ dwb coefficient of the pullback of 2-forms ``F[..., 4, 4]``."""
        s = self.samples
        J0 = np.concatenate([s.zw, np.conj(s.zwb)], -1)
        J1 = np.concatenate([s.zwb, np.conj(s.zw)], -1)
        ex = (slice(None),) * 3 + (None,) * (F.ndim - 5) + (slice(None),)
        return np.einsum("...a,...ab,...b->...", J0[ex], F, J1[ex])


def pullback(f, dom, metric=None, samples=None, conformal_tol=1e-8, strict=True,
             immersive_tol=1e-8):
    """First-order jet of ``f`` on ``dom``."""
    metric = f.ambient() if metric is None else metric
    s = f.sample(dom) if samples is None else samples
    act = dom.active
    if not np.all(np.isfinite(s.z[act])):
        raise NotImmersive("immersion samples are not finite", context="immersion.pullback")
    A = amb.unitary_coframe(metric, s.z)
    alpha = np.einsum("...ij,...j->...i", A, s.zw)
    beta = np.einsum("...ij,...j->...i", A, s.zwb)
    lam2 = np.sum(np.abs(alpha) ** 2 + np.abs(beta) ** 2, axis=-1)
    lam = np.sqrt(lam2)
    # rank of the real differential: area density of the induced metric
    X, Y = alpha + beta, 1j * (alpha - beta)
    E_, G_ = np.sum(np.abs(X) ** 2, -1), np.sum(np.abs(Y) ** 2, -1)
    F_ = np.real(np.sum(X * np.conj(Y), -1))
    area = np.sqrt(np.maximum(E_ * G_ - F_ ** 2, 0.0))
    ratio = np.where(lam2 > 0, area / np.where(lam2 > 0, lam2, 1.0), 0.0)
    if np.min(ratio[act]) < immersive_tol:
        raise NotImmersive(f"differential loses rank (area ratio {np.min(ratio[act]):.2e})",
                           context="immersion.pullback")
    check_conformal_factor(lam, dom)
    safe = np.where(lam > 0, lam, 1.0)[..., None]
    a1, a1b = alpha / safe, beta / safe
    conf = np.sum(a1 * np.conj(a1b), -1)
    iso = np.sum(np.abs(a1) ** 2 + np.abs(a1b) ** 2, -1) - 1.0
    pk = amb.chern_connection(metric, s.z)
    jet = PullbackJet(dom=dom, metric=metric, samples=s, A=A, lam=lam, a1=a1, a1b=a1b,
                      conformality=conf, isometry=iso, W=pk.W, L=pk.L,
                      Wpb_w=None, Wpb_wb=None)
    jet.Wpb_w, jet.Wpb_wb = jet.pull1(pk.W)
    jet._cache["packet"] = pk
    conf_max = float(np.max(np.abs(conf[act]), initial=0.0))
    jet.flags["conformality_max"] = conf_max
    jet.flags["non_conformal"] = conf_max > conformal_tol
    if jet.flags["non_conformal"] and strict:
        raise NotConformal(f"conformality residual {conf_max:.2e} exceeds {conformal_tol:g}",
                           context="immersion.pullback", partial=jet)
    return jet


def log_lambda_derivs(jet):
    if "dloglam" not in jet._cache:
        ll = np.log(jet.lam)
        jet._cache["dloglam"] = (jet.dom.deriv(ll, "w"), jet.dom.deriv(ll, "wb"))
    return jet._cache["dloglam"]


def covariant(jet, s, weight):
    """Covariant derivative of a weight-``weight`` section ``s[..., 2]``;
    returns the phi and phibar coefficients."""
    lw, lwb = log_lambda_derivs(jet)
    dom = jet.dom
    sw = dom.deriv(s, "w") - weight * lw[..., None] * s \
        + np.einsum("...ij,...j->...i", jet.Wpb_w, s)
    swb = dom.deriv(s, "wb") + weight * lwb[..., None] * s \
        + np.einsum("...ij,...j->...i", jet.Wpb_wb, s)
    lam = jet.lam[..., None]
    return sw / lam, swb / lam


def covariant_jet(jet):
    """Fill in the second-order coefficients a_11, a_11b, a_1b1, a_1b1b."""
    if jet.a11 is None:
        jet.a11, jet.a11b = covariant(jet, jet.a1, 1)
        jet.a1b1, jet.a1b1b = covariant(jet, jet.a1b, -1)
    return jet


def surface_curvature(jet):
    """Gauss curvature of lam^2 |dw|^2 computed from the connection form rho,
    with ``d rho = -i K_rho phi ^ phibar`` (so ``K_rho`` is half the
    curvature of the metric ``lam^2 |dw|^2``); returns ``K_rho``."""
    if "K_rho" not in jet._cache:
        lw, lwb = log_lambda_derivs(jet)
        r = -1j * lw
        X = jet.dom.deriv(np.conj(r), "w") - jet.dom.deriv(r, "wb")
        jet._cache["K_rho"] = np.real(1j * X / jet.lam ** 2)
    return jet._cache["K_rho"]


def chern_mean_curvature(jet):
    """H_C^i = a^i_{1 1b} + a^i_{1b 1}."""
    covariant_jet(jet)
    return jet.a11b + jet.a1b1


def cartan_residual(jet):
    """Pointwise residual of -a_{11b} + a_{1b1} = 2 L^i_{jk} a^j_1 a^k_{1b}."""
    covariant_jet(jet)
    rhs = 2 * np.einsum("...ijk,...j,...k->...i", jet.L, jet.a1, jet.a1b)
    return np.max(np.abs(-jet.a11b + jet.a1b1 - rhs), axis=-1)


def lc_mean_curvature(jet):
    """tr D df from the Chern data plus torsion contractions; returns the
    e_i and conj(e_i) components."""
    H = chern_mean_curvature(jet)
    L, a1, a1b = jet.L, jet.a1, jet.a1b
    t1 = np.einsum("...j,...jki,...k->...i", a1b, np.conj(L), np.conj(a1b))
    t2 = np.einsum("...j,...kji,...k->...i", np.conj(a1), np.conj(L), a1)
    e_part = H + 2 * (t1 + t2)
    return e_part, np.conj(e_part)


def lc_mean_curvature_christoffel(jet, h=None, order=None):
    """tr D df from real Christoffel symbols of the ambient metric."""
    s = jet.samples
    Gam = amb.christoffel(jet.metric, s.z, h, order)
    fu = s.zw + s.zwb
    fv = 1j * (s.zw - s.zwb)

    def real(d):
        return np.stack([d[..., 0].real, d[..., 0].imag, d[..., 1].real, d[..., 1].imag], -1)

    Vu, Vv = real(fu), real(fv)
    quad = np.einsum("...abc,...b,...c->...a", Gam, Vu, Vu) \
        + np.einsum("...abc,...b,...c->...a", Gam, Vv, Vv)
    qc = quad[..., 0::2] + 1j * quad[..., 1::2]
    total = (4 * s.zwwb + qc) / (2 * jet.lam[..., None] ** 2)
    e_part = np.einsum("...ij,...j->...i", jet.A, total)
    eb_part = np.einsum("...ij,...j->...i", np.conj(jet.A), np.conj(total))
    return e_part, eb_part


def pulled_curvature(jet):
    """Omega^i_j / (phi ^ phibar) along the immersion."""
    if "Omega_pb" not in jet._cache:
        pk = amb.chern_curvature(jet.metric, jet.samples.z)
        jet._cache["curvature_packet"] = pk
        jet._cache["Omega_pb"] = jet.pull2(pk.Omega) / jet.lam[..., None, None] ** 2
    return jet._cache["Omega_pb"]


def check_ricci_identities(jet):
    """Max-norm residual fields of the two Ricci identities for the
    third-order coefficients."""
    covariant_jet(jet)
    Kr = surface_curvature(jet)[..., None]
    Om = pulled_curvature(jet)
    a_11b_1, _ = covariant(jet, jet.a11b, 0)
    _, a_11_1b = covariant(jet, jet.a11, 2)
    r1 = a_11b_1 - a_11_1b - (-Kr * jet.a1 + np.einsum("...ij,...j->...i", Om, jet.a1))
    a_1b1b_1, _ = covariant(jet, jet.a1b1b, -2)
    _, a_1b1_1b = covariant(jet, jet.a1b1, 0)
    r2 = a_1b1b_1 - a_1b1_1b - (Kr * jet.a1b + np.einsum("...ij,...j->...i", Om, jet.a1b))
    return np.max(np.abs(r1), -1), np.max(np.abs(r2), -1)


def active_max(jet, field_):
    """Max of a non-negative field over the active nodes."""
    return float(np.max(np.asarray(field_)[jet.dom.active], initial=0.0))
