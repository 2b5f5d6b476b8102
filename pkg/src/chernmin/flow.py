"""Descent on the Chern-mean-curvature energy.

Immersions are parametrized as a seed plus a linear combination of smooth
global perturbations (low Fourier modes on a torus, low-degree polynomials
of the unit vector on the sphere).  The objective

    J = int |H_C|^2 dA + beta * int |<a_1, a_1b>|^2 dA

is minimized by first-order descent: forward-difference gradients over
the perturbation coefficients, a Barzilai-Borwein trial step and
backtracking.  Only steps that strictly lower ``J`` are accepted.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy as sp

from . import immersion as im
from .errors import LineSearchStalled, NotImmersive
from .io import complex_planes, planes_complex, read_planes, write_planes


# ---------------------------------------------------------------------------
# perturbation families

@dataclass
class Family:
    """Affine family of immersions ``seed + sum_k c_k B_k``."""

    kind: str                 # "torus" or "sphere"
    dom: object
    metric: object
    base: list                # jets of the seed
    basis: list               # jets of each real perturbation direction
    labels: list
    charts: Optional[list] = None
    seed_name: str = ""

    @property
    def size(self):
        return len(self.basis)

    def jets(self, c):
        c = np.asarray(c, dtype=float)
        out = []
        for k, b in enumerate(self.base):
            acc = b.copy()
            for ck, B in zip(c, self.basis):
                if ck != 0.0:
                    acc = acc + ck * B[k]
            out.append(acc)
        return out

    def samples(self, c):
        J = self.jets(c)
        if self.kind == "torus":
            return im.Samples(*J)
        return im.samples_from_homogeneous(self.dom, J, self.charts)


def torus_family(f, dom, modes=1, metric=None):
    """Perturbations ``e^{i(m u/a + j v/b)} e_k`` with ``|m|, |j| <= modes``
    (real and imaginary coefficient for each), about a torus seed."""
    s = f.sample(dom)
    base = [s.z, s.zw, s.zwb, s.zwwb]
    u, v = dom.w.real, dom.w.imag
    basis, labels = [], []
    for m in range(-modes, modes + 1):
        for j in range(-modes, modes + 1):
            km, kj = m / dom.a, j / dom.b
            e = np.exp(1j * (km * u + kj * v))
            dw = 0.5 * (1j * km + kj)
            dwb = 0.5 * (1j * km - kj)
            jets = [e, dw * e, dwb * e, dw * dwb * e]
            for comp in range(2):
                for phase in (1.0, 1j):
                    B = []
                    for x in jets:
                        arr = np.zeros(x.shape + (2,), dtype=complex)
                        arr[..., comp] = phase * x
                        B.append(arr)
                    basis.append(B)
                    labels.append(f"mode({m},{j}) z{comp + 1} {'re' if phase == 1.0 else 'im'}")
    metric = f.ambient() if metric is None else metric
    return Family("torus", dom, metric, base, basis, labels, seed_name=f.name)


def _sphere_coordinates(inf=False):
    """Unit vector of the sphere in terms of the chart coordinate."""
    w, wb = im._W, im._WB
    r2 = w * wb
    if inf:  # the chart coordinate is 1/w
        return [(w + wb) / (1 + r2), (wb - w) / (sp.I * (1 + r2)), (1 - r2) / (1 + r2)]
    return [(w + wb) / (1 + r2), (w - wb) / (sp.I * (1 + r2)), (r2 - 1) / (1 + r2)]


def sphere_family(f, dom, degree=1, metric=None):
    """Perturbations ``g(x) e_k`` of the homogeneous coordinates near
    ``w = 0`` (and ``(1/w) g(x) e_k`` near infinity), ``g`` a monomial of the
    unit vector ``x`` of degree at most ``degree``."""
    Fs = im.homogeneous_jets(f.hom0, f.hom_inf, dom)
    charts = im.choose_affine_charts(dom, Fs)
    x0, xi = _sphere_coordinates(False), _sphere_coordinates(True)
    monos = [(0, 0, 0)]
    if degree >= 1:
        monos += [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    if degree >= 2:
        monos += [(2, 0, 0), (0, 2, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
    basis, labels = [], []
    for mono in monos:
        g0 = sp.Mul(*[x0[i] ** p for i, p in enumerate(mono)])
        gi = im._W * sp.Mul(*[xi[i] ** p for i, p in enumerate(mono)])
        for comp in range(3):
            for phase in (1, sp.I):
                h0 = [phase * g0 if k == comp else 0 for k in range(3)]
                hi = [phase * gi if k == comp else 0 for k in range(3)]
                basis.append(im.homogeneous_jets(h0, hi, dom))
                labels.append(f"x^{mono} e{comp} {'re' if phase == 1 else 'im'}")
    metric = f.ambient() if metric is None else metric
    return Family("sphere", dom, metric, Fs, basis, labels, charts=charts, seed_name=f.name)


def family_for(f, dom, **kw):
    if f.genus == 1:
        return torus_family(f, dom, modes=kw.get("modes", 1))
    if f.genus == 0:
        return sphere_family(f, dom, degree=kw.get("degree", 1))
    raise ValueError("flows need a torus or sphere subject")


# ---------------------------------------------------------------------------
# energy

def energy_of_samples(samples, metric, dom):
    """(E, penalty) for given samples."""
    jet = im.pullback(None, dom, metric=metric, samples=samples, strict=False)
    H = im.chern_mean_curvature(jet)
    E = float(np.real(dom.integrate(np.sum(np.abs(H) ** 2, -1), jet.lam)))
    pen = float(np.real(dom.integrate(np.abs(jet.conformality) ** 2, jet.lam)))
    return E, pen


def energy(state_or_family, c=None):
    """(E, penalty) of a family at coefficients ``c`` (or of a FlowState)."""
    if isinstance(state_or_family, FlowState):
        st = state_or_family
        return energy_of_samples(st.samples, st.family.metric, st.family.dom)
    fam = state_or_family
    c = np.zeros(fam.size) if c is None else c
    return energy_of_samples(fam.samples(c), fam.metric, fam.dom)


# ---------------------------------------------------------------------------
# descent

@dataclass
class FlowConfig:
    beta: float = 10.0
    max_iter: int = 500
    grad_tol: float = 1e-10
    energy_tol: float = 1e-10      # stop once the objective is this small
    fd_step: float = 1e-6
    initial_step: float = 1.0
    shrink: float = 0.5
    max_backtracks: int = 40
    armijo: float = 1e-4
    conformal_gate: float = 1e-6


@dataclass
class FlowState:
    family: Family
    coeffs: np.ndarray
    samples: object
    energy: float
    penalty: float
    step: float
    iteration: int = 0
    accepted: int = 0
    history: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    grad_norm: float = float("nan")

    def objective(self, beta):
        return self.energy + beta * self.penalty


def _objective(fam, c, beta):
    try:
        E, pen = energy(fam, c)
    except NotImmersive:
        return np.inf, np.inf, np.inf
    if not (np.isfinite(E) and np.isfinite(pen)):
        return np.inf, E, pen
    return E + beta * pen, E, pen


def gradient(fam, c, beta, h=1e-6, J0=None, central=False):
    """Forward-difference (or central) gradient over the family coefficients."""
    J0 = _objective(fam, c, beta)[0] if J0 is None else J0
    g = np.zeros(fam.size)
    for k in range(fam.size):
        ck = c.copy()
        ck[k] += h
        Jp = _objective(fam, ck, beta)[0]
        if central:
            ck[k] -= 2 * h
            g[k] = (Jp - _objective(fam, ck, beta)[0]) / (2 * h)
        else:
            g[k] = (Jp - J0) / h
    return g


def minimize(fam, c0=None, config=None, strict=False):
    """Backtracking descent on ``E + beta * penalty``.

    Seeds whose objective is already below ``energy_tol`` are returned
    untouched.  A failed line search returns the best state with
    ``flags['stalled']`` set (or raises LineSearchStalled when ``strict``).
    """
    cfg = FlowConfig() if config is None else config
    if cfg.beta <= 0:
        raise ValueError("beta must be positive")
    c = np.zeros(fam.size) if c0 is None else np.asarray(c0, dtype=float).copy()
    J, E, pen = _objective(fam, c, cfg.beta)
    if not np.isfinite(J):
        raise NotImmersive("seed is not immersive", context="flow.minimize")
    st = FlowState(fam, c, fam.samples(c), E, pen, cfg.initial_step)
    st.history.append((E, pen, 0.0))
    step = cfg.initial_step
    g_prev = c_prev = None
    central = False
    while st.iteration < cfg.max_iter:
        if J < cfg.energy_tol:
            st.flags["converged"] = "energy"
            break
        g = gradient(fam, c, cfg.beta, cfg.fd_step, J, central)
        gn = float(np.linalg.norm(g))
        st.grad_norm = gn
        if gn < cfg.grad_tol:
            st.flags["converged"] = "gradient"
            break
        if g_prev is not None:
            s, y = c - c_prev, g - g_prev
            sy = float(s @ y)
            if sy > 0:
                step = sy / float(y @ y)
        st.iteration += 1
        accepted = False
        trial = step
        for _ in range(cfg.max_backtracks):
            cn = c - trial * g
            Jn, En, pn = _objective(fam, cn, cfg.beta)
            if Jn < J - cfg.armijo * trial * gn * gn and Jn < J:
                accepted = True
                break
            trial *= cfg.shrink
        if not accepted and not central:
            # near the minimum the forward-difference bias dominates the
            # gradient; retry this iteration with central differences
            central = True
            st.flags["central_differences"] = True
            st.iteration -= 1
            g_prev = None
            continue
        step = trial
        if not accepted:
            st.flags["stalled"] = True
            if strict:
                raise LineSearchStalled(f"no decrease after {cfg.max_backtracks} backtracks",
                                        context="flow.minimize", partial=st)
            break
        g_prev, c_prev = g, c
        c, J, E, pen = cn, Jn, En, pn
        st.accepted += 1
        st.history.append((E, pen, step))
    st.coeffs, st.energy, st.penalty, st.step = c, E, pen, step
    st.samples = fam.samples(c)
    st.flags["non_conformal"] = pen >= cfg.conformal_gate
    return st


def history_monotone(state, beta):
    """True when every accepted step strictly lowered the objective."""
    J = [E + beta * p for E, p, _ in state.history]
    return all(b < a for a, b in zip(J, J[1:]))


def stationarity_check(state, beta, trials=10, h=1e-6, rng=None):
    """Directional derivatives along random unit directions, compared with
    the gradient norm; returns ``(max_directional, grad_norm)``."""
    fam = state.family
    rng = np.random.default_rng(0) if rng is None else rng
    c = state.coeffs
    J0 = _objective(fam, c, beta)[0]
    g = gradient(fam, c, beta, h, J0)
    worst = 0.0
    for _ in range(trials):
        d = rng.normal(size=fam.size)
        d /= np.linalg.norm(d)
        worst = max(worst, abs(_objective(fam, c + h * d, beta)[0] - J0) / h)
    return worst, float(np.linalg.norm(g))


def perturbed_seed(fam, amplitude=1e-2, seed=0):
    """Random coefficient vector of the given Euclidean size."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=fam.size)
    return amplitude * c / np.linalg.norm(c)


def jet_of(state, strict=False):
    """First-order jet of the current state."""
    fam = state.family
    return im.pullback(None, fam.dom, metric=fam.metric, samples=state.samples, strict=strict)


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, state):
    """Write the affine samples ``z`` as real planes (chart-major)."""
    write_planes(path, complex_planes(state.samples.z))


def load_checkpoint(path, charts=1):
    """Affine samples ``z`` of shape ``(charts, n, n, 2)``."""
    return planes_complex(read_planes(path), charts)
