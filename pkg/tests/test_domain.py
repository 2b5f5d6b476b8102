import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chernmin.domain import SurfaceDomain, bump, check_conformal_factor
from chernmin.errors import CircleThroughZero, DegenerateConformalFactor


@pytest.fixture(scope="module")
def torus():
    return SurfaceDomain.torus(64)


@pytest.fixture(scope="module")
def sphere():
    return SurfaceDomain.sphere(128)


def test_torus_area_and_modes(torus):
    assert abs(torus.area() - 4 * np.pi ** 2) < 1e-10
    rect = SurfaceDomain.torus(32, 1.0, 2.0)
    assert abs(rect.area() - 8 * np.pi ** 2) < 1e-10
    w = torus.w
    mode = np.exp(1j * (2 * w.real + 3 * w.imag))
    assert abs(torus.integrate(mode)) < 1e-12


def test_spectral_derivative_exact_on_modes(torus):
    w = torus.w
    u, v = w.real, w.imag
    f = np.exp(1j * (u + v))
    assert np.max(np.abs(torus.deriv(f, "w") - 0.5 * (1j - 1j * 1j) * f)) < 1e-12
    assert np.max(np.abs(torus.deriv(f, "wb") - 0.5 * (1j + 1j * 1j) * f)) < 1e-12
    assert np.max(np.abs(torus.deriv(np.full(torus.shape, 3.0), "w"))) < 1e-14
    with pytest.raises(ValueError):
        torus.deriv(f, "z")


def test_local_derivative_is_fourth_order():
    errs = []
    for n in (32, 64):
        d = SurfaceDomain.torus(n)
        f = np.sin(d.w.real) * np.cos(2 * d.w.imag)
        exact = np.cos(d.w.real) * np.cos(2 * d.w.imag)
        errs.append(np.max(np.abs(d.partial(f, 0, local=True) - exact)))
    assert errs[0] / errs[1] > 14


def test_laplacian_examples(torus):
    w = torus.w
    mode = np.cos(2 * w.real - w.imag)
    lam = np.ones(torus.shape)
    assert np.max(np.abs(torus.laplacian(mode, lam) + 5 * mode)) < 1e-11
    assert np.max(np.abs(torus.laplacian(np.full(torus.shape, 2.0), lam))) < 1e-12
    patch = SurfaceDomain.patch(64)
    h = np.real(patch.w ** 2)
    L = patch.laplacian(h, np.ones(patch.shape))
    assert np.max(np.abs(L[:, 4:-4, 4:-4])) < 1e-10


def test_degenerate_conformal_factor(torus):
    lam = np.ones(torus.shape)
    lam[0, 3, 3] = 0.0
    with pytest.raises(DegenerateConformalFactor):
        torus.laplacian(np.ones(torus.shape), lam)
    with pytest.raises(DegenerateConformalFactor):
        check_conformal_factor(lam)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_stokes_closure(coeffs):
    d = SurfaceDomain.torus(32)
    u, v = d.w.real, d.w.imag
    f = coeffs[0] * np.sin(u) + coeffs[1] * np.cos(2 * v) + coeffs[2] * np.sin(u + v) \
        + coeffs[3] * np.exp(np.cos(u) * coeffs[4]) + coeffs[5] * np.cos(3 * u - v)
    lam = 1.5 + 0.5 * coeffs[6] * np.sin(u) * np.cos(v) + 0.2 * coeffs[7] * np.cos(u)
    assert abs(d.integrate(d.laplacian(f, lam), lam)) < 1e-10


def test_sphere_area_and_partition(sphere):
    assert abs(sphere.area(sphere.round_factor(2.0)) - 4 * np.pi) < 1e-6
    # the three weights form a partition of unity along a meridian
    r = np.linspace(0.05, 20, 400)
    inner, outer = sphere.meta["inner"], sphere.meta["outer"]
    wb, wc = bump(r, inner, outer), bump(1 / r, inner, outer)
    assert np.all(wb + wc <= 1 + 1e-15)


def test_sphere_round_gauss_bonnet(sphere):
    from chernmin.webster import gauss_curvature_factor

    lam = sphere.round_factor(np.sqrt(2.0))
    K = gauss_curvature_factor(lam, sphere)
    assert np.max(np.abs(K - 1)[sphere.active]) < 1e-5
    chi = np.real(sphere.integrate(2 * K, lam)) / (2 * np.pi)
    assert abs(chi - 2) < 1e-3


def test_sphere_chart_derivatives(sphere):
    """d/dW of a global function agrees across the three charts."""
    def F(W):
        return W ** 2 * np.conj(W) / (1 + np.abs(W) ** 2) ** 2

    def FW(W):
        r2 = np.abs(W) ** 2
        return 2 * W * np.conj(W) / (1 + r2) ** 2 - 2 * W ** 2 * np.conj(W) ** 2 / (1 + r2) ** 3

    act = sphere.active
    for ci, ch in enumerate(sphere.charts):
        W = ch.global_w()
        with np.errstate(all="ignore"):
            vals = np.where(np.isfinite(W), F(W), 0.0)
        d = sphere.deriv(vals[None].repeat(3, 0), "w")[ci]
        if ch.to_sphere == "exp":
            d = d / W
        elif ch.to_sphere == "inv":
            d = -d * ch.w ** 2
        mask = act[ci] & np.isfinite(W)
        assert np.max(np.abs(d - FW(W))[mask]) < 1e-5, ch.name


def test_sphere_deriv_re_w_cubed(sphere):
    w = sphere.w[0]
    f = np.real(w ** 3)[None].repeat(3, 0)
    d = sphere.deriv(f, "w")[0]
    interior = np.zeros_like(w, dtype=bool)
    interior[4:-4, 4:-4] = True
    assert np.max(np.abs(d - 1.5 * w ** 2)[interior]) < 1e-6


def test_winding_flux_examples():
    d = SurfaceDomain.torus(128)
    w0 = 2.9 + 3.3j
    w = d.w
    r = np.abs(w - w0)
    assert abs(d.winding_flux(r, 0, w0) - 1) < 0.05
    assert abs(d.winding_flux(r ** 2 * np.exp(w.real), 0, w0) - 2) < 0.05
    smooth = np.exp(w.real) * (2 + 0.3 * np.cos(w.imag))
    assert abs(d.winding_flux(smooth, 0, w0)) < 0.05
    with pytest.raises(CircleThroughZero):
        d.winding_flux(r, 0, w0 + 6 * d.spacing)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 5.0), st.floats(1.0, 5.0), st.integers(0, 3), st.floats(-0.5, 0.5))
def test_winding_flux_radius_stability(x, y, p, tilt):
    d = SurfaceDomain.torus(128)
    w0 = x + 1j * y
    u, v = d.w.real, d.w.imag
    m2 = (2 - np.cos(u - x) - np.cos(v - y)) / 2      # smooth, periodic, zero at w0 only
    m = m2 ** (p / 2) * np.exp(tilt * np.cos(u))
    a = d.winding_flux(m, 0, w0, cells=6)
    b = d.winding_flux(m, 0, w0, cells=9)
    assert abs(a - b) < 0.1
    assert abs(round(a) - p) == 0


def test_describe_and_best_chart(sphere):
    assert SurfaceDomain.torus(32).describe()["genus"] == 1
    assert sphere.describe()["charts"] == ["B", "A", "C"]
    assert sphere.best_chart(0.1) == 0
    assert sphere.best_chart(1.0) == 1
    assert sphere.best_chart(10.0) == 2
    assert SurfaceDomain.patch(32).best_chart(0.3) == 0
