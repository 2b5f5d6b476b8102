import numpy as np
import pytest
import sympy as sp

from chernmin import ambient as amb
from chernmin import immersion as im
from chernmin.domain import SurfaceDomain
from chernmin.errors import ConfigError, NotConformal, NotImmersive

from conftest import subject

CATALOGUE_CASES = [("slanted-flat-torus", {}), ("holomorphic-line", {}), ("clifford-torus", {}),
                   ("veronese-f1", {}), ("hopf-elliptic", {}), ("random-trig", {"seed": 1}),
                   ("rational-curve", {"d": 2})]


def hmax(jet, field_):
    return im.active_max(jet, np.abs(field_))


def vmax(jet, vec):
    return im.active_max(jet, np.linalg.norm(vec, axis=-1))


@pytest.mark.parametrize("name,params", CATALOGUE_CASES, ids=[c[0] for c in CATALOGUE_CASES])
def test_catalogue_jets_are_isometric_and_conformal(name, params):
    _, jet, _ = subject(name, 64, **params)
    assert hmax(jet, jet.isometry) < 1e-12
    assert jet.flags["conformality_max"] < 1e-8
    assert not jet.flags["non_conformal"]


def test_slanted_torus_first_and_second_order():
    _, jet, _ = subject("slanted-flat-torus", 64)
    act = jet.active
    assert np.allclose(jet.a1[act], [0.6, 0.0], atol=1e-15)
    assert np.allclose(jet.a1b[act], [0.0, 0.8], atol=1e-15)
    assert np.allclose(jet.lam[act], 1.0, atol=1e-15)
    im.covariant_jet(jet)
    for x in (jet.a11, jet.a11b, jet.a1b1, jet.a1b1b):
        assert vmax(jet, x) < 1e-12
    assert vmax(jet, im.chern_mean_curvature(jet)) == 0
    r1, r2 = im.check_ricci_identities(jet)
    assert hmax(jet, r1) < 1e-8 and hmax(jet, r2) < 1e-8


def test_slanted_torus_needs_pythagorean_parameter():
    assert im.slanted_flat_torus(0.28).params["c"] == pytest.approx(0.28)
    with pytest.raises(ConfigError):
        im.slanted_flat_torus(0.5)


def test_holomorphic_line_jets():
    _, jet, _ = subject("holomorphic-line", 64)
    assert vmax(jet, jet.a1b) == 0
    im.covariant_jet(jet)
    assert vmax(jet, jet.a1b1) < 1e-12 and vmax(jet, jet.a1b1b) < 1e-12
    assert vmax(jet, im.chern_mean_curvature(jet)) < 1e-6
    r1, r2 = im.check_ricci_identities(jet)
    assert hmax(jet, r1) < 1e-4 and hmax(jet, r2) < 1e-4


def test_clifford_torus_oracle():
    """Direct evaluation of the FS pullback of [e^{ix} : e^{iy} : 1]."""
    _, jet, _ = subject("clifford-torus", 64)
    act = jet.active
    assert np.allclose(np.sum(np.abs(jet.a1) ** 2, -1)[act], 0.5, atol=1e-14)
    assert np.allclose(np.sum(np.abs(jet.a1b) ** 2, -1)[act], 0.5, atol=1e-14)
    # at |z|^2 = 2 the FS metric is (3 I - zb z^T)/9, giving g(z_u, z_u) =
    # g(z_v, z_v) = 2/9; lam^2 = |z_w|^2 + |z_wb|^2 = (|z_u|^2 + |z_v|^2)/2
    assert np.allclose(jet.lam[act] ** 2, 2.0 / 9.0, atol=1e-14)
    assert vmax(jet, im.chern_mean_curvature(jet)) < 1e-5


def test_kahler_collapse_lc_equals_chern():
    for name in ("clifford-torus", "veronese-f1", "holomorphic-line"):
        _, jet, _ = subject(name, 64)
        e, eb = im.lc_mean_curvature(jet)
        H = im.chern_mean_curvature(jet)
        assert vmax(jet, e - H) < 1e-12
        assert vmax(jet, eb - np.conj(H)) < 1e-12


def test_slanted_lc_mean_curvature_vanishes():
    _, jet, _ = subject("slanted-flat-torus", 64)
    e, _ = im.lc_mean_curvature(jet)
    e2, _ = im.lc_mean_curvature_christoffel(jet)
    assert vmax(jet, e) == 0 and vmax(jet, e2) < 1e-12


def test_christoffel_pipeline_on_hopf():
    for c in (1.0, 0.8):
        f = im.hopf_elliptic(c)
        jet = im.pullback(f, f.domain(64))
        e, eb = im.lc_mean_curvature(jet)
        e2, eb2 = im.lc_mean_curvature_christoffel(jet)
        assert vmax(jet, e - e2) < 1e-5 and vmax(jet, eb - eb2) < 1e-5


def test_cartan_relation_random_hopf_tori():
    for seed in range(3):
        _, jet, _ = subject("random-trig", 64, seed=seed)
        assert vmax(jet, im.chern_mean_curvature(jet)) > 1e-2  # genuinely non-minimal
        assert hmax(jet, im.cartan_residual(jet)) < 1e-5
        r1, r2 = im.check_ricci_identities(jet)
        assert hmax(jet, r1) < 1e-3 and hmax(jet, r2) < 1e-3


def test_random_trig_reduces_to_elliptic_curve():
    f0 = im.random_trig(seed=4, amplitude=0.0, c=0.8)
    f1 = im.hopf_elliptic(0.8)
    assert f0.lattice == pytest.approx(f1.lattice)
    d = f0.domain(32)
    z0, z1 = f0.sample(d).z, f1.sample(d).z
    # same curve up to a shift of the angle parameter
    assert np.allclose(np.abs(z0), np.abs(z1), atol=1e-12)


def test_rational_curves_are_holomorphic_and_minimal():
    for d in (1, 2):
        _, jet, _ = subject("rational-curve", 64, d=d)
        assert vmax(jet, jet.a1b) < 1e-12
        assert vmax(jet, im.chern_mean_curvature(jet)) < 1e-5


def test_sphere_affine_chart_choice():
    f = im.veronese_f1()
    dom = f.domain(32)
    Fs = im.homogeneous_jets(f.hom0, f.hom_inf, dom)
    chosen = im.choose_affine_charts(dom, Fs)
    assert len(chosen) == len(dom.charts)
    assert all(c["min_ratio"] > 0.1 for c in chosen)


def test_not_conformal_flagged_and_strict():
    x, y = (im._W + im._WB) / 2, (im._W - im._WB) / (2 * sp.I)
    f = im.ImmersionMap("stretched", "flat-torus", 1, exprs=[2 * x + 0 * y, sp.I * y])
    dom = f.domain(32)
    jet = im.pullback(f, dom, strict=False)
    assert jet.flags["non_conformal"] and jet.flags["conformality_max"] > 0.1
    with pytest.raises(NotConformal) as err:
        im.pullback(f, dom)
    assert err.value.partial is not None


def test_not_immersive():
    f = im.ImmersionMap("collapsed", "flat-torus", 1, exprs=[(im._W + im._WB) / 2, 0])
    with pytest.raises(NotImmersive):
        im.pullback(f, f.domain(32), strict=False)


def test_pullback_gauge_invariance_of_invariants():
    """Scalars are unchanged by a smooth U(2) reframing of the ambient coframe."""
    def gauge(z):
        # a function of z/|z|, hence well defined on the Hopf quotient
        x = z / np.linalg.norm(z, axis=-1, keepdims=True)
        t = 2 * np.real(x[..., 0]) + np.imag(x[..., 1])
        c, s = np.cos(t), np.sin(t)
        U = np.zeros(z.shape[:-1] + (2, 2), dtype=complex)
        U[..., 0, 0], U[..., 0, 1] = c, -s * np.exp(1j * t)
        U[..., 1, 0], U[..., 1, 1] = s * np.exp(-1j * t), c
        return U

    f = im.hopf_elliptic(0.8)
    dom = f.domain(32)
    base = im.pullback(f, dom)
    rot = im.pullback(f, dom, metric=f.ambient().with_options(gauge=gauge))
    for jet_field in ("lam", "conformality", "isometry"):
        assert np.max(np.abs(getattr(base, jet_field) - getattr(rot, jet_field))) < 1e-12
    Hb = np.linalg.norm(im.chern_mean_curvature(base), axis=-1)
    Hr = np.linalg.norm(im.chern_mean_curvature(rot), axis=-1)
    assert np.max(np.abs(Hb - Hr)) < 1e-8


def test_unknown_immersion():
    with pytest.raises(ConfigError):
        im.get_immersion("nope")


def test_local_patch_graph():
    f = im.minimal_graph_patch(shift=0.3)
    dom = f.domain(64)
    jet = im.pullback(f, dom)
    assert dom.describe()["patch"]
    inner = np.zeros(dom.shape, dtype=bool)
    inner[:, 6:-6, 6:-6] = True
    assert np.max(np.linalg.norm(im.chern_mean_curvature(jet), axis=-1)[inner]) < 1e-6
