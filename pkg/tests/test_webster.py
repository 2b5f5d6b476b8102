import numpy as np
import pytest

from chernmin import ambient as amb
from chernmin import webster as wb
from chernmin.angle import SingularPoint
from chernmin.domain import SurfaceDomain
from chernmin.errors import ExcisionTooLarge, NotChernMinimal, NotGeneric

from conftest import subject


def report(name, n=64, **params):
    _, jet, a = subject(name, n, **params)
    return wb.verify(jet, a)


def test_flat_torus_gauss_bonnet():
    _, jet, _ = subject("slanted-flat-torus", 64)
    K = wb.gauss_curvature(jet)
    assert np.max(np.abs(K)) < 1e-12
    assert abs(report("slanted-flat-torus").chi_T) < 1e-8


def test_gauss_curvature_two_routes_agree():
    for name in ("clifford-torus", "veronese-f1"):
        _, jet, _ = subject(name, 64)
        wb.gauss_curvature(jet)
        assert jet.flags["gauss_crosscheck"] < 1e-4, name


def test_slanted_torus_webster():
    r = report("slanted-flat-torus")
    assert r.classification == "generic" and r.accepted
    assert (r.P, r.Q) == (0, 0)
    assert r.residual_thm31 < 1e-6 and r.residual_thm42 < 1e-6
    chk = wb.constant_angle_check(subject("slanted-flat-torus", 64)[1])
    assert chk["is_constant_real"] and chk["sup_K_plus_Kperp"] < 1e-6 and chk["consistent"]


def test_clifford_torus_constant_angle():
    _, jet, a = subject("clifford-torus", 64)
    chk = wb.constant_angle_check(jet, a)
    assert chk["is_constant_real"] and chk["sup_K_plus_Kperp"] < 1e-4 and chk["consistent"]
    r = wb.verify(jet, a)
    assert r.accepted and r.chern_mean_curvature_max < 1e-5


def test_veronese_sphere_integers():
    r = report("veronese-f1")
    assert (r.P, r.Q) == (0, 0) and r.accepted
    assert abs(r.chi_T - 2) < 0.05 and abs(r.chi_N + 2) < 0.05
    assert abs(r.c1_pairing) < 0.05
    assert r.residual_thm31 < 0.1 and r.residual_thm42 < 0.1
    assert r.sin_balance_residual < 1e-3


@pytest.mark.parametrize("d", [1, 2])
def test_rational_curves_skip_webster(d):
    r = report("rational-curve", d=d)
    assert r.classification == "holomorphic" and not r.accepted
    assert abs(r.c1_pairing - 3 * d) < 1e-3
    assert r.residual_thm31 is None and r.residual_thm42 is None
    with pytest.raises(NotGeneric) as err:
        _, jet, a = subject("rational-curve", 64, d=d)
        wb.verify(jet, a, strict=True)
    assert err.value.partial.c1_int == 3 * d


def test_non_chern_minimal_is_classified():
    _, jet, a = subject("random-trig", 64, seed=0)
    r = wb.verify(jet, a)
    assert r.classification == "not-chern-minimal" and r.P is None
    with pytest.raises(NotChernMinimal):
        wb.verify(jet, a, strict=True)


def test_kahler_balance_tight():
    """With a Kähler ambient the tan balance holds without theta_L."""
    for name in ("clifford-torus", "veronese-f1", "slanted-flat-torus"):
        r = report(name)
        assert r.tan_balance_residual < 1e-5, name
        assert r.torsion_product_residual < 1e-4, name


def test_stokes_residual_on_all_subjects():
    for name, kw in [("hopf-elliptic", {}), ("random-trig", {"seed": 2}),
                     ("clifford-torus", {}), ("veronese-f1", {})]:
        _, jet, _ = subject(name, 64, **kw)
        assert wb.stokes_residual(jet, force=True) < 1e-4, name


def test_theta_l_nonzero_on_hopf_subject():
    _, jet, _ = subject("random-trig", 64, seed=2)
    pw, pwb = jet.pull1(amb.theta_L(jet.metric, jet.samples.z))
    assert np.max(np.abs(pw) / jet.lam) > 0.1


def test_euler_numbers_excision_guard():
    dom = SurfaceDomain.torus(32)
    lam = np.ones(dom.shape)
    K = np.zeros(dom.shape)
    pts = [SingularPoint("complex", 0, complex(x, y)) for x in (1, 3, 5) for y in (1, 3, 5)]
    big = wb.excision_mask(dom, pts, cells=4)
    with pytest.raises(ExcisionTooLarge):
        wb.euler_numbers(K, K, dom, lam, excise=big)
    small = wb.excision_mask(dom, pts[:1], cells=1)
    chi_T, chi_N, corr = wb.euler_numbers(K, K, dom, lam, excise=small, max_fraction=0.05)
    assert chi_T == 0 and chi_N == 0 and corr == 0


def test_excision_mask_wraps_on_torus():
    dom = SurfaceDomain.torus(32)
    m = wb.excision_mask(dom, [SingularPoint("complex", 0, 0j)], cells=2.5)
    assert m[0, 0, 0] and m[0, -1, -1] and m[0, 1, -2] and not m[0, 2, -2]
    assert m.sum() == 21


@pytest.mark.parametrize("args,lhs,holds", [
    ((1, 0, 0, 0, 0, 0), 0, True),
    ((0, 0, -2, 0, 0, 0), 0, True),
    ((0, 3, 1, 0, 0, 0), 6, False),
])
def test_wolfson_bound_examples(args, lhs, holds):
    out = wb.wolfson_bound(*args)
    assert out["lhs"] == lhs and out["rhs"] == 0 and out["holds"] is holds


def test_wolfson_bound_with_singular_points():
    assert wb.wolfson_bound(2, 0, 0, 0, 1, 1) == {"lhs": -2, "rhs": -2, "holds": True}
    assert not wb.wolfson_bound(2, 0, 1, 0, 1, 1)["holds"]
