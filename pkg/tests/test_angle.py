import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chernmin import angle as ang
from chernmin.domain import SurfaceDomain
from chernmin.errors import NonIsolatedZeroSuspected

from conftest import subject


@pytest.fixture(scope="module")
def torus():
    return SurfaceDomain.torus(128)


def planted(dom, p, cofactor=1.0):
    """Order-p complex points at the four zeros of sin u + i sin v."""
    u, v = dom.w.real, dom.w.imag
    return ang.synthetic_jet(dom, (np.sin(u) + 1j * np.sin(v)) ** p * cofactor)


def test_angle_examples():
    _, jet, a = subject("holomorphic-line", 64)
    assert np.max(np.abs(a.alpha[jet.dom.active])) == 0
    _, jet, a = subject("clifford-torus", 64)
    assert np.max(np.abs(a.alpha - np.pi / 2)[jet.dom.active]) < 1e-6
    _, jet, a = subject("slanted-flat-torus", 64)
    assert np.max(np.abs(a.alpha - 2 * np.arccos(0.6))[jet.dom.active]) < 1e-10


def test_cos_sin_partition():
    for name in ("clifford-torus", "random-trig", "veronese-f1"):
        _, jet, a = subject(name, 64)
        act = jet.dom.active
        assert np.max(np.abs(a.cos2 + a.sin2 - 1)[act]) < 1e-12
        assert np.max(np.abs(np.cos(a.alpha / 2) ** 2 - a.cos2)[act]) < 1e-12


def test_slanted_torus_has_no_singular_points():
    _, _, a = subject("slanted-flat-torus", 64)
    assert a.singular_points == [] and a.classification == "generic"
    assert a.P == 0 and a.Q == 0


def test_holomorphic_subject_is_not_isolated():
    _, jet, _ = subject("holomorphic-line", 64)
    a = ang.kahler_angle(jet)
    with pytest.raises(NonIsolatedZeroSuspected) as err:
        ang.locate_singular_points(a, jet.dom)
    assert err.value.kind == "complex"
    assert err.value.classification == "holomorphic"
    assert ang.analyze(jet).classification == "holomorphic"


@pytest.mark.parametrize("p", [1, 2, 3])
def test_planted_orders(torus, p):
    u, v = torus.w.real, torus.w.imag
    for cof in (1.0, np.exp(np.cos(u)), np.exp(1.5 * np.cos(u) + 0.5j * np.sin(v))):
        a = ang.analyze(planted(torus, p, cof))
        assert len(a.singular_points) == 4
        assert all(pt.kind == "complex" and pt.order == p for pt in a.singular_points)
        assert all(abs(pt.flux - p) < 0.05 for pt in a.singular_points)
        assert a.P == 4 * p and a.Q == 0
        assert ang.orders_consistent(a)


def test_planted_anticomplex_points(torus):
    u, v = torus.w.real, torus.w.imag
    s = (np.sin(u) - 1j * np.sin(v)) ** 2
    a = ang.analyze(ang.synthetic_jet(torus, np.ones(torus.shape), s))
    assert [pt.kind for pt in a.singular_points] == ["anticomplex"] * 4
    assert a.Q == 8 and a.P == 0


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.floats(0, np.pi))
def test_angle_gauge_invariance(phi, psi, theta):
    """alpha is unchanged when a_1, a_1b are rotated by a unitary matrix."""
    dom = SurfaceDomain.torus(32)
    jet = planted(dom, 1, np.exp(np.cos(dom.w.real)))
    U = np.array([[np.cos(theta), -np.exp(1j * psi) * np.sin(theta)],
                  [np.exp(1j * phi) * np.sin(theta), np.exp(1j * (phi + psi)) * np.cos(theta)]])
    rot = ang.SyntheticJet(dom, jet.a1 @ U.T, jet.a1b @ U.T)
    a, b = ang.kahler_angle(jet), ang.kahler_angle(rot)
    assert np.max(np.abs(a.alpha - b.alpha)) < 1e-12


def test_orders_stable_under_radius(torus):
    jet = planted(torus, 2, np.exp(np.cos(torus.w.real)))
    a6 = ang.analyze(jet, radius_cells=6)
    a9 = ang.analyze(jet, radius_cells=9)
    for p, q in zip(a6.singular_points, a9.singular_points):
        assert p.order == q.order
        assert abs(p.flux - q.flux) < 0.1


def test_orders_consistent_rejects_fractional_flux():
    pt = ang.SingularPoint("complex", 0, 0j, order=1, flux=1.3)
    field_ = ang.AngleField(*(np.zeros(1),) * 5, singular_points=[pt])
    assert not ang.orders_consistent(field_)
    pt.flux = 1.05
    assert ang.orders_consistent(field_)
