"""Curvatures, Euler numbers, the c1 pairing and integer-identity reports.

Normalizations: with ``phi = lam dw`` the surface connection form ``rho``
satisfies ``d rho = -i K phi ^ phibar``, which makes ``K`` half the Gauss
curvature of ``lam^2 |dw|^2``; areas are measured by ``dA = 2 lam^2 du dv``
and the Laplacian is ``Delta = Delta_0 / (2 lam^2)``, so that
``K = -Delta log lam`` and ``(1/2 pi) int K dA`` is the Euler number.
The normal curvature ``K_perp`` obeys ``d rho_perp = -i K_perp phi ^ phibar``
in the same units.
"""

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import ambient as amb
from . import immersion as im
from .angle import analyze
from .errors import AdaptedFrameDegenerate, ExcisionTooLarge, NotChernMinimal, NotGeneric


# ---------------------------------------------------------------------------
# intrinsic curvature

def surface_laplacian(dom, field_, lam, local=False):
    """``Delta = Delta_0 / (2 lam^2)``."""
    return 0.5 * dom.laplacian(field_, lam, local)


def gauss_curvature_factor(lam, dom, local=False):
    """K = -Delta log lam for a conformal factor alone."""
    return -surface_laplacian(dom, np.log(lam), lam, local)


def gauss_curvature(jet, crosscheck=True):
    """K from the connection form ``rho``; optionally cross-checked against
    ``-Delta log lam`` (the discrepancy lands in ``jet.flags``)."""
    K = im.surface_curvature(jet)
    if crosscheck:
        K2 = gauss_curvature_factor(jet.lam, jet.dom)
        act = jet.dom.active
        jet.flags["gauss_crosscheck"] = float(np.max(np.abs(K - K2)[act], initial=0.0))
    return K


# ---------------------------------------------------------------------------
# adapted frame and normal curvature

def _complement(row):
    """Unit row orthogonal (Hermitian) to the unit row ``row``."""
    return np.stack([-np.conj(row[..., 1]), np.conj(row[..., 0])], -1)


def adapted_frame(jet, threshold=1e-8):
    """Unitary ``U`` with ``U omega = (cos(a/2) phi, sin(a/2) phibar)``.

    Returns ``(U, valid)``; ``valid`` marks nodes where both rows come from
    the jet (away from complex and anticomplex points).  Elsewhere the
    missing row is completed orthogonally and the node must be excised.
    """
    c = np.linalg.norm(jet.a1, axis=-1)
    s = np.linalg.norm(jet.a1b, axis=-1)
    okc, oks = c > threshold, s > threshold
    r1 = np.conj(jet.a1) / np.where(okc, c, 1.0)[..., None]
    r2 = np.conj(jet.a1b) / np.where(oks, s, 1.0)[..., None]
    r1 = np.where(okc[..., None], r1, _complement(r2))
    r2 = np.where(oks[..., None], r2, _complement(r1))
    U = np.stack([r1, r2], -2)
    act = jet.dom.active
    # a holomorphic (antiholomorphic) subject has no second (first) row at
    # all; the formulas then only see the completed row and stay valid
    if not np.any(oks[act]):
        return U, okc
    if not np.any(okc[act]):
        return U, oks
    return U, okc & oks


def _matmul(a, b):
    return np.einsum("...ij,...jk->...ik", a, b)


def _dag(a):
    return np.conj(np.swapaxes(a, -1, -2))


def normal_connection(jet, lc=None, local=None, threshold=1e-8):
    """dw and dwbar coefficients of ``rho_perp`` and the validity mask."""
    dom = jet.dom
    if lc is None:
        lc = jet._cache.get("lc")
        if lc is None:
            lc = amb.levi_civita(jet.metric, jet.samples.z)
            jet._cache["lc"] = lc
    U, valid = adapted_frame(jet, threshold)
    if local is None:
        local = not bool(np.all(valid[dom.active]))
    Ph_w, Ph_wb = jet.pull1(lc.Phi)
    Ps_w, Ps_wb = jet.pull1(lc.Psi)
    Ud = _dag(U)
    dUd_w, dUd_wb = dom.deriv(Ud, "w", local), dom.deriv(Ud, "wb", local)
    Ub = np.conj(U)
    UbT = np.swapaxes(Ub, -1, -2)
    phi_w = _matmul(_matmul(U, Ph_w), Ud) + _matmul(U, dUd_w)
    phi_wb = _matmul(_matmul(U, Ph_wb), Ud) + _matmul(U, dUd_wb)
    psi_w = _matmul(_matmul(Ub, Ps_w), UbT)[..., 1, 0]
    psi_wb = _matmul(_matmul(Ub, Ps_wb), UbT)[..., 1, 0]
    c2 = np.sum(np.abs(jet.a1) ** 2, -1)
    s2 = np.sum(np.abs(jet.a1b) ** 2, -1)
    cs = np.sqrt(c2 * s2)
    rho_w = 1j * (s2 * phi_w[..., 0, 0] - c2 * phi_w[..., 1, 1] - cs * (psi_w - np.conj(psi_wb)))
    rho_wb = 1j * (s2 * phi_wb[..., 0, 0] - c2 * phi_wb[..., 1, 1]
                   - cs * (psi_wb - np.conj(psi_w)))
    return rho_w, rho_wb, valid


def normal_curvature(jet, excise=None, lc=None, local=None):
    """K_perp from ``d rho_perp = -i K_perp phi ^ phibar``.

    ``excise`` is a boolean mask of nodes to drop; nodes where the adapted
    frame degenerates are always dropped.  Returns ``(K_perp, mask)`` where
    ``mask`` marks the nodes on which ``K_perp`` is trusted.
    """
    dom = jet.dom
    rho_w, rho_wb, valid = normal_connection(jet, lc, local)
    if local is None:
        local = not bool(np.all(valid[dom.active]))
    X = dom.deriv(rho_wb, "w", local) - dom.deriv(rho_w, "wb", local)
    Kp = np.real(1j * X / jet.lam ** 2)
    mask = dom.active & valid
    if excise is not None:
        mask &= ~excise
    elif not np.all(valid[dom.active]):
        raise AdaptedFrameDegenerate("adapted frame degenerates and no excision was given",
                                     context="webster.normal_curvature")
    return np.where(mask, Kp, 0.0), mask


# ---------------------------------------------------------------------------
# excision

def excision_mask(dom, points, cells=8):
    """Nodes within ``cells`` grid cells of any singular point, in every chart."""
    mask = np.zeros(dom.shape, dtype=bool)
    for p in points:
        W = dom.charts[p.chart].global_w(np.array(p.location))
        for ci, c in enumerate(dom.charts):
            if dom.periodic:
                loc = p.location
                d = c.w - loc
                du = np.mod(d.real + np.pi * dom.a, 2 * np.pi * dom.a) - np.pi * dom.a
                dv = np.mod(d.imag + np.pi * dom.b, 2 * np.pi * dom.b) - np.pi * dom.b
            else:
                if ci == p.chart:
                    loc = p.location
                elif not np.isfinite(W) and c.to_sphere != "inv":
                    continue
                else:
                    loc = complex(c.from_global(W))
                d = c.w - loc
                du, dv = d.real, d.imag
                if c.periodic[1]:
                    dv = np.mod(dv + np.pi, 2 * np.pi) - np.pi
            mask[ci] |= np.hypot(du / c.du, dv / c.dv) <= cells
    return mask


def interior_mask(dom, cells=6):
    """Drop a band of ``cells`` nodes along the edges of a bare patch."""
    mask = np.ones(dom.shape, dtype=bool)
    if dom.meta.get("patch"):
        mask[:, :cells] = mask[:, -cells:] = False
        mask[:, :, :cells] = mask[:, :, -cells:] = False
    return mask


# ---------------------------------------------------------------------------
# integrals

def euler_numbers(K, Kperp, dom, lam, excise=None, max_fraction=0.01):
    """(chi_T, chi_N, correction) with ``chi = (1/2 pi) int K dA``.

    ``K_perp`` is dropped on the excised nodes; the returned correction is
    the O(eps^2) estimate (mean of ``K_perp`` on a ring around the excised
    set times its area) and is already included in ``chi_N``.
    """
    chi_T = float(np.real(dom.integrate(2 * K, lam))) / (2 * np.pi)
    if excise is None or not np.any(excise & dom.active):
        chi_N = float(np.real(dom.integrate(2 * Kperp, lam))) / (2 * np.pi)
        return chi_T, chi_N, 0.0
    total = dom.area(lam)
    cut = float(np.real(dom.integrate(np.ones(dom.shape), lam, mask=excise)))
    if cut > max_fraction * total:
        raise ExcisionTooLarge(f"excised area fraction {cut / total:.3%} exceeds "
                               f"{max_fraction:.1%}", context="webster.euler_numbers")
    keep = ~excise
    chi_N = float(np.real(dom.integrate(2 * Kperp, lam, mask=keep))) / (2 * np.pi)
    ring = _dilate(excise, dom, 3) & ~excise & dom.active
    corr = 0.0
    if np.any(ring):
        corr = float(np.mean(Kperp[ring])) * 2 * cut / (2 * np.pi)
    return chi_T, chi_N + corr, corr


def _dilate(mask, dom, cells):
    from scipy import ndimage

    out = np.empty_like(mask)
    for ci, c in enumerate(dom.charts):
        mode = ["wrap" if p else "constant" for p in c.periodic]
        out[ci] = ndimage.maximum_filter(mask[ci].astype(np.uint8), size=2 * cells + 1,
                                         mode=mode).astype(bool)
    return out


def ricci_pullback(jet):
    """dw ^ dwbar coefficient of f^* Ric."""
    im.pulled_curvature(jet)
    pk = jet._cache["curvature_packet"]
    return jet.pull2(pk.ricci)


def c1_pairing(jet):
    """(1/2 pi) int f^* Ric."""
    R = ricci_pullback(jet)
    return _integrate_2form(jet, R) / (2 * np.pi)


def _integrate_2form(jet, coef, mask=None):
    """Integral of ``coef dw ^ dwbar`` (``dw ^ dwbar = -2 i du dv``)."""
    lam = jet.lam
    val = jet.dom.integrate(-2j * coef / lam ** 2, lam, mask=mask)
    return float(np.real(val))


def d_theta_pullback(jet):
    """dw ^ dwbar coefficient of f^* d theta_L (zero for Kähler ambients)."""
    if "dtheta_pb" not in jet._cache:
        if jet.metric.kahler:
            jet._cache["dtheta_pb"] = np.zeros(jet.lam.shape, dtype=complex)
        else:
            jet._cache["dtheta_pb"] = jet.pull2(amb.d_theta_L(jet.metric, jet.samples.z))
    return jet._cache["dtheta_pb"]


def stokes_residual(jet, force=False):
    """|(1/2 pi) int f^* d theta_L|; ``force`` evaluates the finite-difference
    form even for Kähler ambients."""
    if force and "dtheta_pb" not in jet._cache:
        jet._cache["dtheta_pb"] = jet.pull2(amb.d_theta_L(jet.metric, jet.samples.z))
    return abs(_integrate_2form(jet, d_theta_pullback(jet))) / (2 * np.pi)


# ---------------------------------------------------------------------------
# pointwise identities

def laplacian_identity_residuals(jet, angle, mask, local=False):
    """Residual fields of ``Delta log sin(alpha) = K + K_perp`` and of
    ``Delta log tan(a/2) phi ^ phibar = -i f^*Ric + f^*d theta_L``."""
    dom, lam = jet.dom, jet.lam
    K = gauss_curvature(jet, crosscheck=False)
    Kp, kmask = normal_curvature(jet, excise=~mask, local=local)
    # the logs blow up only at the singular points themselves, which lie
    # well inside the excision; clip so the stencils there stay finite
    tiny = 1e-300
    c = np.sqrt(np.maximum(angle.cos2, tiny))
    s = np.sqrt(np.maximum(angle.sin2, tiny))
    logsin = np.log(2 * s * c)
    logtan = np.log(s) - np.log(c)
    r_sin = surface_laplacian(dom, logsin, lam, local) - K - Kp
    lhs = surface_laplacian(dom, logtan, lam, local) * lam ** 2
    r_tan = lhs - (-1j * ricci_pullback(jet) + d_theta_pullback(jet))
    r_tan = np.abs(r_tan) / lam ** 2
    return np.where(kmask, np.abs(r_sin), 0.0), np.where(kmask, r_tan, 0.0), Kp, kmask


def torsion_product_residual(jet, mask):
    """Residual of ``2 |a_{1b 1}|^2 = L^1_12 L^2_12 sin(alpha)`` and of the
    conjugate form, with the torsion expressed in the adapted frame."""
    im.covariant_jet(jet)
    U, valid = adapted_frame(jet)
    lhs = 2 * np.sum(np.abs(jet.a1b1) ** 2, -1)
    L12 = jet.L[..., :, 0, 1]
    Lp = np.einsum("...ij,...j->...i", U, L12) * np.conj(np.linalg.det(U))[..., None] ** 2
    c = np.linalg.norm(jet.a1, axis=-1)
    s = np.linalg.norm(jet.a1b, axis=-1)
    rhs = Lp[..., 0] * Lp[..., 1] * 2 * s * c
    m = mask & valid
    r = np.maximum(np.abs(lhs - rhs), np.abs(lhs - np.conj(rhs)))
    return float(np.max(r[m], initial=0.0))


# ---------------------------------------------------------------------------
# reports

@dataclass
class WebsterReport:
    classification: str
    genus: Optional[int]
    n: int
    P: Optional[int] = None
    Q: Optional[int] = None
    chi_T: Optional[float] = None
    chi_N: Optional[float] = None
    chi_T_int: Optional[int] = None
    chi_N_int: Optional[int] = None
    c1_pairing: Optional[float] = None
    c1_int: Optional[int] = None
    residual_thm31: Optional[float] = None
    residual_thm42: Optional[float] = None
    stokes_residual: Optional[float] = None
    sin_balance_residual: Optional[float] = None
    tan_balance_residual: Optional[float] = None
    torsion_product_residual: Optional[float] = None
    chern_mean_curvature_max: Optional[float] = None
    excision_cells: int = 8
    excision_correction: float = 0.0
    accepted: bool = False
    singular_points: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def _round_gap(x):
    return abs(x - round(x))


def verify(jet, angle=None, tol_chern=1e-5, excise_cells=8, tol_detect=1e-3,
           radius_cells=6, max_excised=0.01, strict=False):
    """Check the integer identities and the pointwise balances on a subject.

    Non-Chern-minimal subjects get the classification ``not-chern-minimal``
    and only the intrinsic checks; holomorphic or antiholomorphic subjects
    skip the integer formulae.  With ``strict`` the corresponding errors are
    raised instead, carrying the partial report.
    """
    dom = jet.dom
    rep = WebsterReport(classification="generic", genus=dom.genus, n=dom.n,
                        excision_cells=excise_cells)
    H = np.max(np.abs(im.chern_mean_curvature(jet)), -1)
    rep.chern_mean_curvature_max = im.active_max(jet, H)
    K = gauss_curvature(jet)
    rep.chi_T = float(np.real(dom.integrate(2 * K, jet.lam))) / (2 * np.pi)
    rep.chi_T_int = int(round(rep.chi_T))
    rep.c1_pairing = c1_pairing(jet)
    rep.c1_int = int(round(rep.c1_pairing))
    rep.stokes_residual = stokes_residual(jet)
    if rep.chern_mean_curvature_max > tol_chern:
        rep.classification = "not-chern-minimal"
        rep.notes.append(f"max|H_C| = {rep.chern_mean_curvature_max:.3e} > {tol_chern:g}")
        if strict:
            raise NotChernMinimal(rep.notes[-1], context="webster.verify", partial=rep)
        return rep
    angle = analyze(jet, tol_detect, radius_cells) if angle is None else angle
    rep.classification = angle.classification
    interior = interior_mask(dom)
    if angle.classification != "generic":
        rep.notes.append(f"{angle.classification} subject: integer formulae not applicable")
        if strict:
            raise NotGeneric(rep.notes[-1], context="webster.verify", partial=rep)
        return rep
    pts = angle.singular_points
    rep.singular_points = [p.as_dict() for p in pts]
    rep.P, rep.Q = angle.P, angle.Q
    excise = excision_mask(dom, pts, excise_cells)
    keep = dom.active & ~excise & interior
    local = bool(pts)
    r_sin, r_tan, Kp, kmask = laplacian_identity_residuals(jet, angle, keep, local)
    rep.sin_balance_residual = float(np.max(r_sin[kmask], initial=0.0))
    rep.tan_balance_residual = float(np.max(r_tan[kmask], initial=0.0))
    rep.torsion_product_residual = torsion_product_residual(jet, keep)
    chi_T, chi_N, corr = euler_numbers(K, Kp, dom, jet.lam, excise if pts else None,
                                       max_excised)
    rep.chi_N, rep.excision_correction = chi_N, corr
    rep.chi_N_int = int(round(chi_N))
    rep.residual_thm31 = abs((rep.P - rep.Q) + rep.c1_pairing)
    rep.residual_thm42 = abs((rep.P + rep.Q) + rep.chi_T + rep.chi_N)
    gaps = [_round_gap(rep.chi_T), _round_gap(rep.chi_N), _round_gap(rep.c1_pairing)]
    gaps += [abs(p.flux - p.order) for p in pts]
    rep.accepted = dom.genus is not None and max(gaps) < 0.1 and all(p.order >= 1 for p in pts)
    return rep


def constant_angle_check(jet, angle=None, tol=1e-6, tol_k=1e-4, delta=1e-3, excise=None):
    """Both predicates of the constant-Kähler-angle criterion at grid precision."""
    angle = analyze(jet) if angle is None else angle
    act = jet.dom.active & interior_mask(jet.dom)
    a = angle.alpha[act]
    is_const = bool(np.std(a) < tol and np.min(a) > delta and np.max(a) < np.pi - delta)
    ex = excise if excise is not None else excision_mask(jet.dom, angle.singular_points)
    K = gauss_curvature(jet, crosscheck=False)
    Kp, mask = normal_curvature(jet, excise=ex | ~act, local=bool(angle.singular_points))
    sup = float(np.max(np.abs(K + Kp)[mask], initial=0.0))
    return {"is_constant_real": is_const, "sup_K_plus_Kperp": sup,
            "consistent": is_const == (sup < tol_k)}


def wolfson_bound(genus, c1_pairing, I_f, D_f, P, Q):
    """Evaluate ``(2 - 2g) + |c1| + I_f - 2 D_f <= -2 min(P, Q) <= 0``."""
    genus, c1_pairing, I_f, D_f, P, Q = (int(x) for x in (genus, c1_pairing, I_f, D_f, P, Q))
    lhs = (2 - 2 * genus) + abs(c1_pairing) + I_f - 2 * D_f
    mid = -2 * min(P, Q)
    return {"lhs": lhs, "rhs": mid, "holds": bool(lhs <= mid <= 0)}
