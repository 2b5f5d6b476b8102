"""Hermitian surfaces on coordinate charts: unitary coframes, the Chern
connection with its torsion and curvature, the Levi-Civita connection in the
same frame, and the torsion 1-form ``theta_L``.

Conventions
-----------
Points are complex arrays of shape ``(..., 2)``.  Differential forms are
stored by their coefficients over the basis ``(dz1, dz2, dzb1, dzb2)``:
1-forms as trailing axes of length 4, 2-forms as antisymmetric ``4 x 4``
blocks ``F`` meaning ``sum_{a<b} F[a, b] theta^a ^ theta^b``.

The unitary coframe is ``omega^i = A[i, j] dz^j`` with
``sum_i omega^i conj(omega^i) = g_{j kbar} dz^j dzb^k``.  Connection forms
``W[i, j]`` are ``omega^i_j``: the ``e_i`` component of ``nabla e_j``, so that
``d omega = -W ^ omega + Theta``.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import fd
from .errors import DerivativeUnavailable, NonPositiveMetric


# ---------------------------------------------------------------------------
# metric fields

@dataclass(frozen=True)
class AmbientChart:
    """Chart description; ``periods`` are real lattice translations of the
    quotient (flat torus) and ``dilation`` the Hopf identification factor."""

    name: str
    box: tuple = ((-np.inf, np.inf), (-np.inf, np.inf))
    periods: Optional[float] = None
    dilation: Optional[float] = None
    puncture: bool = False

    def contains(self, z, margin=0.0):
        z = np.asarray(z)
        ok = np.ones(z.shape[:-1], dtype=bool)
        for k, (lo, hi) in enumerate(self.box):
            r = np.abs(z[..., k])
            ok &= (r >= lo + margin) if np.isfinite(lo) else ok
            ok &= (r <= hi - margin) if np.isfinite(hi) else ok
        if self.puncture:
            ok &= np.linalg.norm(z, axis=-1) > margin
        return ok


@dataclass(frozen=True)
class MetricField:
    """Hermitian metric ``G(z)[j, k] = g_{j kbar}`` on one chart.

    ``dG`` optionally returns the derivatives of ``G`` along the real
    directions ``x1, y1, x2, y2`` as an array ``(..., 4, 2, 2)``.  ``h`` is the
    relative finite-difference step, multiplied by ``scale(z)``.  ``gauge``
    is an optional ``U(2)``-valued field rotating the canonical coframe.
    """

    name: str
    G: Callable
    dG: Optional[Callable] = None
    chart: AmbientChart = field(default_factory=lambda: AmbientChart("C2"))
    h: float = 1e-3
    order: int = 4
    scale: Optional[Callable] = None
    gauge: Optional[Callable] = None
    kahler: bool = False

    def step(self, z):
        z = np.asarray(z)
        if self.scale is None:
            return np.full(z.shape[:-1], self.h)
        return self.h * self.scale(z)

    def with_options(self, **kw):
        return replace(self, **kw)

    def without_analytic(self):
        return replace(self, dG=None)


def _eye_like(z):
    return np.broadcast_to(np.eye(2, dtype=complex), z.shape[:-1] + (2, 2)).copy()


def flat_metric(torus=False):
    """Euclidean C^2, optionally as the quotient C^2 / (2 pi Z)^4."""
    chart = AmbientChart("flat-torus", periods=2 * np.pi) if torus else AmbientChart("flat")

    def G(z):
        return _eye_like(np.asarray(z))

    def dG(z):
        z = np.asarray(z)
        return np.zeros(z.shape[:-1] + (4, 2, 2), dtype=complex)

    return MetricField("flat-torus" if torus else "flat", G, dG, chart=chart, kahler=True)


def fubini_study_metric():
    """Fubini-Study metric of CP^2 in an affine chart, normalized so G(0) = I."""

    def G(z):
        z = np.asarray(z, dtype=complex)
        S = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
        outer = np.conj(z)[..., :, None] * z[..., None, :]
        return (_eye_like(z) * S[..., None, None] - outer) / (S ** 2)[..., None, None]

    def dG(z):
        z = np.asarray(z, dtype=complex)
        S = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
        eye = _eye_like(z)
        outer = np.conj(z)[..., :, None] * z[..., None, :]
        out = []
        for d in fd.real_directions():
            dS = 2.0 * np.real(np.sum(np.conj(z) * d, axis=-1))
            douter = np.conj(d)[:, None] * z[..., None, :] + np.conj(z)[..., :, None] * d[None, :]
            val = (eye * dS[..., None, None] - douter) / (S ** 2)[..., None, None] \
                - 2.0 * (eye * S[..., None, None] - outer) * (dS / S ** 3)[..., None, None]
            out.append(val)
        return np.stack(out, axis=-3)

    def scale(z):
        return np.maximum(1.0, np.linalg.norm(z, axis=-1))

    return MetricField("fubini-study", G, dG, chart=AmbientChart("CP2-affine"),
                       scale=scale, kahler=True)


def hopf_metric():
    """Hopf surface (C^2 minus 0)/(z ~ 2z) with the metric |dz|^2/|z|^2."""

    def G(z):
        z = np.asarray(z, dtype=complex)
        r2 = np.sum(np.abs(z) ** 2, axis=-1)
        return _eye_like(z) / r2[..., None, None]

    def dG(z):
        z = np.asarray(z, dtype=complex)
        r2 = np.sum(np.abs(z) ** 2, axis=-1)
        eye = _eye_like(z)
        out = []
        for d in fd.real_directions():
            dr2 = 2.0 * np.real(np.sum(np.conj(z) * d, axis=-1))
            out.append(-eye * (dr2 / r2 ** 2)[..., None, None])
        return np.stack(out, axis=-3)

    def scale(z):
        return np.linalg.norm(z, axis=-1)

    chart = AmbientChart("hopf-annulus", box=((-np.inf, np.inf), (-np.inf, np.inf)),
                         dilation=2.0, puncture=True)
    return MetricField("hopf", G, dG, chart=chart, scale=scale)


CATALOGUE = {
    "flat": lambda: flat_metric(False),
    "flat-torus": lambda: flat_metric(True),
    "fubini-study": fubini_study_metric,
    "hopf": hopf_metric,
}


def get_metric(name):
    try:
        return CATALOGUE[name]()
    except KeyError:
        raise KeyError(f"unknown metric {name!r}; known: {sorted(CATALOGUE)}") from None


def hopf_fundamental_point(z):
    """Rescale points by powers of 2 into the annulus 1 <= |z| < 2."""
    z = np.asarray(z, dtype=complex)
    r = np.linalg.norm(z, axis=-1)
    k = np.floor(np.log2(r))
    return z * (2.0 ** -k)[..., None]


# ---------------------------------------------------------------------------
# coframe

def _cholesky_upper(G):
    """A with A^T conj(A) = G, A upper triangular with positive diagonal."""
    M = np.swapaxes(G, -1, -2)
    m00 = np.real(M[..., 0, 0])
    m11 = np.real(M[..., 1, 1])
    l00 = np.sqrt(m00)
    l10 = M[..., 1, 0] / l00
    l11 = np.sqrt(m11 - np.abs(l10) ** 2)
    A = np.zeros(G.shape, dtype=complex)
    A[..., 0, 0] = l00
    A[..., 0, 1] = np.conj(l10)
    A[..., 1, 1] = l11
    return A


def check_metric(G, tol=1e-13):
    """Raise NonPositiveMetric unless every G is Hermitian positive definite."""
    herm = np.max(np.abs(G - np.conj(np.swapaxes(G, -1, -2))), initial=0.0)
    scale = np.max(np.abs(G), initial=1.0)
    if herm > 1e-12 * scale:
        raise NonPositiveMetric(f"metric not Hermitian (defect {herm:.2e})")
    ev = np.linalg.eigvalsh(0.5 * (G + np.conj(np.swapaxes(G, -1, -2))))
    if np.min(ev, initial=np.inf) <= tol * scale:
        raise NonPositiveMetric(f"metric not positive definite (min eigenvalue {np.min(ev):.3e})")


def unitary_coframe(metric, p, check=True):
    """Coframe matrix A(p) (shape ``(..., 2, 2)``) with omega = A dz."""
    p = np.asarray(p, dtype=complex)
    G = metric.G(p)
    if check:
        check_metric(G)
    A = _cholesky_upper(G)
    if metric.gauge is not None:
        A = metric.gauge(p) @ A
    return A


def _cholesky_direction(L, dM):
    """Derivative of the lower Cholesky factor given dM = d(G^T)."""
    Linv = np.linalg.inv(L)
    X = Linv @ dM @ np.conj(np.swapaxes(Linv, -1, -2))
    Phi = np.tril(X, -1)
    Phi = Phi + 0.5 * np.real(np.einsum("...ii->...i", X))[..., None] * np.eye(2)
    return L @ Phi


def coframe_gradient(metric, p):
    """Real-direction derivatives of A, shape ``(..., 4, 2, 2)``."""
    p = np.asarray(p, dtype=complex)
    if metric.dG is None:
        return fd.real_gradient(lambda q: unitary_coframe(metric, q, check=False),
                                p, metric.step(p), metric.order)
    G = metric.G(p)
    A0 = _cholesky_upper(G)
    L = np.conj(np.swapaxes(A0, -1, -2))
    dG = metric.dG(p)
    dA0 = []
    for k in range(4):
        dM = np.swapaxes(dG[..., k, :, :], -1, -2)
        dL = _cholesky_direction(L, dM)
        dA0.append(np.conj(np.swapaxes(dL, -1, -2)))
    dA0 = np.stack(dA0, axis=-3)
    if metric.gauge is None:
        return dA0
    U = metric.gauge(p)
    dU = fd.real_gradient(metric.gauge, p, metric.step(p), metric.order)
    return dU @ A0[..., None, :, :] + U[..., None, :, :] @ dA0


# ---------------------------------------------------------------------------
# form helpers

def conj_form(v):
    """Coefficients of the complex conjugate of a 1-form."""
    v = np.asarray(v)
    return np.conj(np.concatenate([v[..., 2:], v[..., :2]], axis=-1))


def conj_2form(F):
    perm = [2, 3, 0, 1]
    return np.conj(F[..., perm, :][..., :, perm])


def wedge(a, b):
    """2-form a ^ b from 1-form coefficient vectors."""
    return a[..., :, None] * b[..., None, :] - a[..., None, :] * b[..., :, None]


def coframe_forms(A):
    """omega^i and conj(omega^i) as 1-form coefficient arrays ``(..., 2, 4)``."""
    z = np.zeros(A.shape, dtype=complex)
    om = np.concatenate([A, z], axis=-1)
    omb = np.concatenate([z, np.conj(A)], axis=-1)
    return om, omb


def exterior_1form(dv):
    """d of a 1-form given its Wirtinger gradient ``dv[..., a, b] = d_a v_b``."""
    return dv - np.swapaxes(dv, -1, -2)


def exterior_2form(dF):
    """d of a 2-form given ``dF[..., a, b, c] = d_a F_bc``; returns a 3-form
    array ``T[a, b, c]`` (cyclic sum)."""
    return (dF + np.transpose(dF, (*range(dF.ndim - 3), dF.ndim - 2, dF.ndim - 1, dF.ndim - 3))
            + np.transpose(dF, (*range(dF.ndim - 3), dF.ndim - 1, dF.ndim - 3, dF.ndim - 2)))


def to_frame_basis(F, A):
    """Re-express a 2-form from the dz/dzb basis in the omega/omegabar basis."""
    Ainv = np.linalg.inv(A)
    T = np.zeros(A.shape[:-2] + (4, 4), dtype=complex)
    T[..., :2, :2] = Ainv
    T[..., 2:, 2:] = np.conj(Ainv)
    return np.swapaxes(T, -1, -2) @ F @ T


def form_to_frame(v, A):
    """Split a 1-form into coefficients over omega^l and conj(omega^l)."""
    Ainv = np.linalg.inv(A)
    X = np.einsum("...m,...ml->...l", v[..., :2], Ainv)
    Y = np.einsum("...m,...ml->...l", v[..., 2:], np.conj(Ainv))
    return X, Y


# ---------------------------------------------------------------------------
# Chern connection

@dataclass
class FramePacket:
    """Pointwise Chern data.  ``W`` has shape ``(..., 2, 2, 4)``, ``L`` is
    ``L[i, j, k] = L^i_{jk}``; curvature entries are filled by
    :func:`chern_curvature`."""

    A: np.ndarray
    W: np.ndarray
    L: np.ndarray
    Theta: np.ndarray
    Omega: Optional[np.ndarray] = None
    R_hol: Optional[np.ndarray] = None
    R_mix: Optional[np.ndarray] = None
    R_anti: Optional[np.ndarray] = None
    ricci: Optional[np.ndarray] = None


def _connection_parts(A, dA_real):
    dA = fd.to_wirtinger(dA_real, A.ndim - 2)
    Ainv = np.linalg.inv(A)
    W = np.zeros(A.shape + (4,), dtype=complex)
    for k in range(2):
        W01 = -dA[..., 2 + k, :, :] @ Ainv
        W[..., 2 + k] = W01
        W[..., k] = -np.conj(np.swapaxes(W01, -1, -2))
    # Theta^i = dA_ij ^ dz^j + W[i, m] ^ A[m, j] dz^j, restricted to (2,0)
    T = np.einsum("...kij->...ikj", dA[..., :2, :, :]) \
        + np.einsum("...imk,...mj->...ikj", W[..., :2], A)
    theta12 = T[..., :, 0, 1] - T[..., :, 1, 0]
    detA = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    l12 = theta12 / (2.0 * detA[..., None])
    L = np.zeros(A.shape[:-2] + (2, 2, 2), dtype=complex)
    L[..., :, 0, 1] = l12
    L[..., :, 1, 0] = -l12
    Theta = np.zeros(A.shape[:-2] + (2, 4, 4), dtype=complex)
    Theta[..., 0, 1] = theta12
    Theta[..., 1, 0] = -theta12
    return W, L, Theta


def chern_connection(metric, p):
    """Connection forms, torsion L^i_{jk} and torsion 2-forms at ``p``."""
    p = np.asarray(p, dtype=complex)
    A = unitary_coframe(metric, p)
    W, L, Theta = _connection_parts(A, coframe_gradient(metric, p))
    return FramePacket(A=A, W=W, L=L, Theta=Theta)


def _connection_only(metric, p):
    A = unitary_coframe(metric, p, check=False)
    W, _, _ = _connection_parts(A, coframe_gradient(metric, p))
    return W


def _torsion_only(metric, p):
    A = unitary_coframe(metric, p, check=False)
    _, L, _ = _connection_parts(A, coframe_gradient(metric, p))
    return L


def _check_window(metric, p):
    h = metric.step(p)
    if not np.all(metric.chart.contains(p, margin=2 * np.max(h, initial=0.0))):
        raise DerivativeUnavailable(f"finite-difference window leaves chart {metric.chart.name}",
                                    context="ambient")
    return h


def chern_curvature(metric, p):
    """Full Chern packet including curvature 2-forms and their coefficients."""
    pk = chern_connection(metric, p)
    h = _check_window(metric, np.asarray(p))
    dW = fd.wirtinger_gradient(lambda q: _connection_only(metric, q), p, h, metric.order)
    # dW[..., a, i, j, b] = d_a W_ij,b
    dWij = np.moveaxis(dW, -4, -2)
    Omega = exterior_1form(dWij)
    Wa = pk.W
    Omega = Omega + np.einsum("...ika,...kjb->...ijab", Wa, Wa) \
        - np.einsum("...ikb,...kja->...ijab", Wa, Wa)
    pk.Omega = Omega
    F = to_frame_basis(Omega, pk.A[..., None, None, :, :])
    pk.R_hol = 0.5 * F[..., :2, :2]
    pk.R_mix = F[..., :2, 2:]
    pk.R_anti = 0.5 * F[..., 2:, 2:]
    pk.ricci = 1j * (Omega[..., 0, 0, :, :] + Omega[..., 1, 1, :, :])
    return pk


def ricci_form(metric, p):
    """Ricci form i (Omega^1_1 + Omega^2_2) as a 4x4 coefficient block."""
    return chern_curvature(metric, p).ricci


def fundamental_form(metric, p):
    """The fundamental 2-form i sum omega^i ^ conj(omega^i)."""
    A = unitary_coframe(metric, p)
    om, omb = coframe_forms(A)
    return 1j * np.sum(wedge(om, omb), axis=-3)


def real_basis_components(F):
    """Coefficients of a 2-form over dx_a ^ dx_b in real coordinates."""
    C = np.zeros((4, 4), dtype=complex)
    for r, d in enumerate(fd.real_directions()):
        C[r, :2] = d
        C[r, 2:] = np.conj(d)
    return C @ F @ C.T


def structure_residual(metric, p, h=None, order=2):
    """max |d omega + W ^ omega - Theta| with d omega by finite differences."""
    p = np.asarray(p, dtype=complex)
    pk = chern_connection(metric, p)
    if h is None:
        h = metric.step(p)
    dA = fd.wirtinger_gradient(lambda q: unitary_coframe(metric, q, check=False), p, h, order)
    om, _ = coframe_forms(pk.A)
    # omega^i coefficients are A[i, :] on dz; d omega^i[a, b] = d_a A_ib (b < 2)
    dom = np.zeros(pk.A.shape[:-2] + (2, 4, 4), dtype=complex)
    for i in range(2):
        dv = np.zeros(pk.A.shape[:-2] + (4, 4), dtype=complex)
        dv[..., :, :2] = dA[..., :, i, :]
        dom[..., i, :, :] = exterior_1form(dv)
    WW = np.einsum("...ija,...jb->...iab", pk.W, om) - np.einsum("...ijb,...ja->...iab", pk.W, om)
    res = dom + WW - pk.Theta
    return float(np.max(np.abs(res), initial=0.0))


# ---------------------------------------------------------------------------
# torsion 1-form and torsion derivatives

def theta_L(metric, p, packet=None):
    """theta_L = (L^1_{1i} + L^2_{2i}) omega^i - conj(...) conj(omega^i)."""
    pk = packet if packet is not None else chern_connection(metric, p)
    v = pk.L[..., 0, 0, :] + pk.L[..., 1, 1, :]
    om, omb = coframe_forms(pk.A)
    return np.einsum("...i,...ia->...a", v, om) - np.einsum("...i,...ia->...a", np.conj(v), omb)


def d_theta_L(metric, p):
    """Exterior derivative of theta_L by finite differences."""
    p = np.asarray(p, dtype=complex)
    h = _check_window(metric, p)
    dv = fd.wirtinger_gradient(lambda q: theta_L(metric, q), p, h, metric.order)
    return exterior_1form(dv)


def torsion_derivatives(metric, p):
    """Covariant derivatives ``(Lh, Lb)`` with ``Lh[i, j, k, l] = L^i_{jkl}``
    and ``Lb[i, j, k, l] = L^i_{jk lbar}``."""
    p = np.asarray(p, dtype=complex)
    pk = chern_connection(metric, p)
    h = _check_window(metric, p)
    dL = fd.wirtinger_gradient(lambda q: _torsion_only(metric, q), p, h, metric.order)
    c = np.moveaxis(dL, -4, -1)  # (..., i, j, k, slot)
    L, W = pk.L, pk.W
    c = c - np.einsum("...ilk,...ljs->...ijks", L, W) \
        - np.einsum("...ijl,...lks->...ijks", L, W) \
        + np.einsum("...ljk,...ils->...ijks", L, W)
    X, Y = form_to_frame(c, pk.A[..., None, None, None, :, :])
    return X, Y, pk


def d_theta_L_from_torsion(metric, p):
    """d theta_L assembled from covariant torsion derivatives."""
    Lh, Lb, pk = torsion_derivatives(metric, p)
    om, omb = coframe_forms(pk.A)
    beta = 0.0
    for m in range(2):
        for i in range(2):
            one = np.einsum("...j,...ja->...a", Lh[..., m, m, i, :], om) \
                + np.einsum("...j,...ja->...a", Lb[..., m, m, i, :], omb)
            beta = beta + wedge(one, om[..., i, :]) + pk.L[..., m, m, i, None, None] * pk.Theta[..., i, :, :]
    return beta - conj_2form(beta)


# ---------------------------------------------------------------------------
# Levi-Civita connection, computed from real Christoffel symbols

@dataclass
class LCPacket:
    """``Phi[i, j] = phi^i_j`` (the ``e_i`` part of ``D e_j``) and
    ``Psi[j, i] = phi_i^{jbar}`` (the ``conj(e_j)`` part of ``D e_i``), both
    as 1-form coefficients over the dz/dzb basis."""

    A: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    christoffel: np.ndarray


def real_metric(metric, p):
    """Riemannian metric Re(g) in the real coordinates (x1, y1, x2, y2)."""
    G = metric.G(np.asarray(p, dtype=complex))
    C = fd.real_directions()
    return np.real(np.einsum("aj,...jk,bk->...ab", C, G, np.conj(C)))


def christoffel(metric, p, h=None, order=None):
    """Gamma^a_{bc} of the underlying Riemannian metric, by finite differences."""
    p = np.asarray(p, dtype=complex)
    h = metric.step(p) if h is None else h
    order = metric.order if order is None else order
    g = real_metric(metric, p)
    dg = fd.real_gradient(lambda q: real_metric(metric, q), p, h, order)  # [..., c, a, b]
    ginv = np.linalg.inv(g)
    low = 0.5 * (np.einsum("...bdc->...dbc", dg) + np.einsum("...cdb->...dbc", dg)
                 - np.einsum("...dbc->...dbc", dg))
    return np.einsum("...ad,...dbc->...abc", ginv, low)


def _frame_vectors(metric, p):
    """Real-basis components E[a, i] of the unitary frame e_i."""
    A = unitary_coframe(metric, p, check=False)
    Ainv = np.linalg.inv(A)
    Zv = np.zeros((4, 2), dtype=complex)
    Zv[0, 0], Zv[1, 0] = 0.5, -0.5j
    Zv[2, 1], Zv[3, 1] = 0.5, -0.5j
    return np.einsum("aj,...ji->...ai", Zv, Ainv)


def _decompose(A, V):
    """Split real-basis vectors V[..., a, i] into e_j and conj(e_j) parts."""
    P = np.array([[1, 1j, 0, 0], [0, 0, 1, 1j]])
    Pb = np.conj(P)
    ce = np.einsum("...jk,ka,...ai->...ji", A, P, V)
    cb = np.einsum("...jk,ka,...ai->...ji", np.conj(A), Pb, V)
    return ce, cb


def levi_civita(metric, p, h=None, order=None):
    """Levi-Civita connection in the unitary frame, independent of the Chern
    computation (only the frame itself is shared)."""
    p = np.asarray(p, dtype=complex)
    h = metric.step(p) if h is None else h
    order = metric.order if order is None else order
    A = unitary_coframe(metric, p)
    Gam = christoffel(metric, p, h, order)
    E = _frame_vectors(metric, p)
    dE = fd.real_gradient(lambda q: _frame_vectors(metric, q), p, h, order)  # [..., b, a, i]
    DB = dE + np.einsum("...abc,...ci->...bai", Gam, E)
    Dslot = fd.to_wirtinger(DB, p.ndim - 1)  # [..., s, a, i]
    Phi = np.zeros(A.shape + (4,), dtype=complex)
    Psi = np.zeros(A.shape + (4,), dtype=complex)
    for s in range(4):
        ce, cb = _decompose(A, Dslot[..., s, :, :])
        Phi[..., s] = ce
        Psi[..., s] = cb
    return LCPacket(A=A, Phi=Phi, Psi=Psi, christoffel=Gam)


def connection_difference_terms(pk):
    """Right-hand sides of the Chern/Levi-Civita difference formulas."""
    om, omb = coframe_forms(pk.A)
    L = pk.L
    phi = pk.W + np.einsum("...ijk,...ka->...ija", L, om) \
        - np.einsum("...jik,...ka->...ija", np.conj(L), omb)
    psi = np.einsum("...kij,...ka->...jia", L, omb)
    return phi, psi


def check_connection_difference(metric, p, h=None, order=None, lc=None, packet=None):
    """Max-norm residuals (r1, r2) between the Levi-Civita coefficients and
    their expression through the Chern connection and torsion."""
    pk = packet if packet is not None else chern_connection(metric, p)
    lc = lc if lc is not None else levi_civita(metric, p, h, order)
    phi, psi = connection_difference_terms(pk)
    r1 = float(np.max(np.abs(lc.Phi - phi), initial=0.0))
    r2 = float(np.max(np.abs(lc.Psi - psi), initial=0.0))
    return r1, r2
