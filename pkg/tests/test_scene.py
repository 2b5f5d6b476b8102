import numpy as np
import pytest

from chernmin import scene
from chernmin.errors import ConfigError


def test_minimal_scene_defaults():
    sc = scene.parse_scene({"immersion": "clifford-torus"})
    assert sc.name == "clifford-torus" and sc.grid == 128
    assert sc.tolerances.chern == 1e-5 and not sc.flow.run
    eff = sc.effective()
    assert eff["tolerances"]["rounding"] == 0.1 and eff["flow"]["beta"] == 10.0


def test_scene_files_load():
    for name in ("slanted", "holomorphic-line", "veronese", "clifford", "line-flow",
                 "hopf-custom"):
        sc = scene.load_scene(f"scenes/{name}.yaml")
        assert sc.name == name


@pytest.mark.parametrize("data", [
    [],
    {"immersion": "clifford-torus", "colour": 1},
    {"grid": 64},
    {"immersion": "no-such-thing"},
    {"immersion": "clifford-torus", "grid": 100},
    {"immersion": "clifford-torus", "grid": 1024},
    {"immersion": "clifford-torus", "tolerances": {"chern": -1}},
    {"immersion": "clifford-torus", "tolerances": {"bogus": 1}},
    {"immersion": "clifford-torus", "flow": {"beta": 0}},
    {"immersion": "clifford-torus", "flow": {"max_iter": "many"}},
    {"immersion": "clifford-torus", "metric": "no-metric"},
    {"immersion": "clifford-torus", "winding_radius": 1},
])
def test_invalid_scenes(data):
    with pytest.raises(ConfigError):
        scene.parse_scene(data)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        scene.load_scene(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [unclosed\n")
    with pytest.raises(ConfigError):
        scene.load_scene(bad)


def test_bad_immersion_params():
    sc = scene.parse_scene({"immersion": {"name": "clifford-torus", "params": {"q": 2}}})
    with pytest.raises(ConfigError):
        scene.resolve_immersion(sc)


def test_random_trig_takes_scene_seed():
    sc = scene.parse_scene({"immersion": "random-trig", "seed": 3})
    assert scene.resolve_immersion(sc).params["seed"] == 3


def test_custom_metric_matches_catalogue():
    from chernmin import ambient as amb

    sc = scene.load_scene("scenes/hopf-custom.yaml")
    f = scene.resolve_immersion(sc)
    custom = scene.resolve_metric(sc, f)
    ref = amb.get_metric("hopf")
    z = np.array([[1.0 + 0.5j, -0.3 + 1.1j], [0.2 - 1.4j, 0.9 + 0.1j]])
    assert np.allclose(custom.G(z), ref.G(z), atol=1e-14)
    assert np.allclose(custom.dG(z), ref.dG(z), atol=1e-10)
    assert not custom.kahler


@pytest.mark.parametrize("text", ["exp(x1) * cos(y2) + z1*zb1", "2", 3.5, "x1**2 + I*0"])
def test_expression_grammar_accepts(text):
    scene.parse_expression(text)


@pytest.mark.parametrize("text", ["__import__('os')", "log(x1)", "x1**y1", "w + 1",
                                  "x1; y1", "Integral(x1, x1)", "x1 +", ["x1"]])
def test_expression_grammar_rejects(text):
    with pytest.raises(ConfigError):
        scene.parse_expression(text)


def test_custom_metric_must_be_hermitian():
    with pytest.raises(ConfigError):
        scene.custom_metric({"G": [["1", "I"], ["I", "1"]]})
    with pytest.raises(ConfigError):
        scene.custom_metric({"G": [["1", "0"]]})
    with pytest.raises(ConfigError):
        scene.custom_metric({"name": "x"})
