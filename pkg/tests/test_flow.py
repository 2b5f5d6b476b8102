import numpy as np
import pytest

from chernmin import flow as fl
from chernmin import immersion as im
from chernmin.errors import NotImmersive


def family(name, n, **params):
    f = im.get_immersion(name, **params)
    fam = fl.family_for(f, f.domain(n))
    fam.metric = f.ambient() if fam.metric is None else fam.metric
    return f, fam


@pytest.fixture(scope="module")
def line32():
    return family("holomorphic-line", 32)[1]


@pytest.fixture(scope="module")
def short_run(line32):
    cfg = fl.FlowConfig(max_iter=4)
    return fl.minimize(line32, fl.perturbed_seed(line32, 1e-2, 0), cfg), cfg


def test_energy_examples(line32):
    E, pen = fl.energy(line32)
    assert E < 1e-10 and pen < 1e-12
    _, fam = family("clifford-torus", 32)
    E, pen = fl.energy(fam)
    assert E < 1e-8 and pen < 1e-20
    _, fam = family("slanted-flat-torus", 32)
    assert fl.energy(fam)[0] == pytest.approx(0.0, abs=1e-20)


def test_perturbation_raises_energy(line32):
    c = fl.perturbed_seed(line32, 1e-2, 3)
    assert np.linalg.norm(c) == pytest.approx(1e-2)
    assert fl.energy(line32, c)[0] > 1e-6


@pytest.mark.parametrize("name", ["holomorphic-line", "clifford-torus", "veronese-f1"])
def test_chern_minimal_seeds_are_fixed_points(name):
    # at n=32 the Veronese discretization energy sits just above energy_tol
    _, fam = family(name, 48)
    st = fl.minimize(fam)
    assert st.accepted == 0 and st.iteration == 0
    assert st.flags["converged"] == "energy"
    assert np.all(st.coeffs == 0)


def test_descent_is_monotone(short_run):
    st, cfg = short_run
    assert st.accepted >= 1
    assert fl.history_monotone(st, cfg.beta)
    J0 = st.history[0][0] + cfg.beta * st.history[0][1]
    assert st.objective(cfg.beta) < J0


def test_history_monotone_detects_increase(short_run):
    st, cfg = short_run
    bad = fl.FlowState(st.family, st.coeffs, st.samples, 0.0, 0.0, 1.0,
                       history=[(1.0, 0.0, 0.0), (2.0, 0.0, 1.0)])
    assert not fl.history_monotone(bad, cfg.beta)


def test_stationarity_at_fixed_point(line32):
    st = fl.minimize(line32)
    worst, gn = fl.stationarity_check(st, 10.0, trials=4)
    assert worst < 1e-4 and gn < 1e-3


def test_checkpoint_round_trip(short_run, tmp_path):
    st, _ = short_run
    path = tmp_path / "state.cmf"
    fl.save_checkpoint(path, st)
    z = fl.load_checkpoint(path, charts=st.samples.z.shape[0])
    assert np.array_equal(z, st.samples.z)


def test_jet_of_state_is_immersion(short_run):
    st, _ = short_run
    jet = fl.jet_of(st)
    assert np.all(jet.lam[jet.dom.active] > 0)


def test_bad_configuration(line32):
    with pytest.raises(ValueError):
        fl.minimize(line32, config=fl.FlowConfig(beta=0.0))
    with pytest.raises(NotImmersive), np.errstate(all="ignore"):
        fl.minimize(line32, c0=np.full(line32.size, np.nan))
