"""Scene files: YAML documents naming a metric, an immersion and a grid.

Example::

    # slanted torus in the flat 4-torus
    name: slanted
    immersion:
      name: slanted-flat-torus
      params: {c: 0.6}
    grid: 128
    tolerances: {chern: 1.0e-5}

Custom metrics give the Hermitian matrix ``G`` as strings in the real
coordinates ``x1, y1, x2, y2`` (or ``z1, z2, zb1, zb2``) using a closed
grammar: numbers, ``+ - * /``, powers, ``exp``, ``sin``, ``cos``, ``tan``,
``sinh``, ``cosh``, ``tanh`` and the constants ``pi``, ``I``.  Derivatives
are exact (symbolic).
"""

from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
import sympy as sp
import yaml
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from . import ambient as amb
from . import immersion as im
from .errors import ConfigError


@dataclass
class Tolerances:
    detect: float = 1e-3
    chern: float = 1e-5
    rounding: float = 0.1
    conformal: float = 1e-8
    stokes: float = 1e-4


@dataclass
class FlowSettings:
    run: bool = False
    beta: float = 10.0
    max_iter: int = 500
    amplitude: float = 1e-2
    modes: int = 1
    degree: int = 1
    energy_tol: float = 1e-10


@dataclass
class Scene:
    name: str
    immersion: str
    params: dict = field(default_factory=dict)
    metric: Optional[object] = None      # catalogue name, custom mapping, or None
    grid: int = 128
    tolerances: Tolerances = field(default_factory=Tolerances)
    winding_radius: int = 6
    excision_cells: int = 8
    flow: FlowSettings = field(default_factory=FlowSettings)
    emit_plots: bool = False
    dump_fields: bool = False
    seed: int = 0
    require_chern_minimal: bool = True

    def effective(self):
        """Plain nested dict with every default resolved."""
        return asdict(self)


_KNOWN = {"name", "immersion", "metric", "grid", "tolerances", "winding_radius",
          "excision_cells", "flow", "flags", "seed", "require_chern_minimal"}


def _sub(cls, data, what):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be a mapping", context="scene.parse")
    names = set(cls.__dataclass_fields__)
    bad = set(data) - names
    if bad:
        raise ConfigError(f"unknown {what} keys: {sorted(bad)}", context="scene.parse")
    base = cls()
    kw = {}
    for k, v in data.items():
        default = getattr(base, k)
        try:
            kw[k] = type(default)(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{what}.{k}: cannot read {v!r}", context="scene.parse") from None
    return replace(base, **kw)


def parse_scene(data, source="<scene>"):
    """Validate a decoded YAML mapping into a Scene."""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: scene must be a mapping", context="scene.parse")
    bad = set(data) - _KNOWN
    if bad:
        raise ConfigError(f"{source}: unknown keys {sorted(bad)}", context="scene.parse")
    imm = data.get("immersion")
    if isinstance(imm, str):
        imm = {"name": imm}
    if not isinstance(imm, dict) or "name" not in imm:
        raise ConfigError(f"{source}: 'immersion' needs a name", context="scene.parse")
    params = dict(imm.get("params") or {})
    flags = data.get("flags") or {}
    sc = Scene(name=str(data.get("name", imm["name"])), immersion=str(imm["name"]),
               params=params, metric=data.get("metric"),
               grid=int(data.get("grid", 128)),
               tolerances=_sub(Tolerances, data.get("tolerances"), "tolerances"),
               winding_radius=int(data.get("winding_radius", 6)),
               excision_cells=int(data.get("excision_cells", 8)),
               flow=_sub(FlowSettings, data.get("flow"), "flow"),
               emit_plots=bool(flags.get("emit_plots", False)),
               dump_fields=bool(flags.get("dump_fields", False)),
               seed=int(data.get("seed", 0)),
               require_chern_minimal=bool(data.get("require_chern_minimal", True)))
    validate(sc, source)
    return sc


def validate(sc, source="<scene>"):
    n = sc.grid
    if n < 32 or n > 512 or n & (n - 1):
        raise ConfigError(f"{source}: grid must be a power of two in [32, 512], got {n}",
                          context="scene.validate")
    for k, v in asdict(sc.tolerances).items():
        if not v > 0:
            raise ConfigError(f"{source}: tolerance {k} must be positive", context="scene.validate")
    if sc.immersion not in im.CATALOGUE:
        raise ConfigError(f"{source}: unknown immersion {sc.immersion!r}; "
                          f"known: {sorted(im.CATALOGUE)}", context="scene.validate")
    if isinstance(sc.metric, str) and sc.metric not in amb.CATALOGUE:
        raise ConfigError(f"{source}: unknown metric {sc.metric!r}; known: {sorted(amb.CATALOGUE)}",
                          context="scene.validate")
    if sc.winding_radius < 2 or sc.excision_cells < 1:
        raise ConfigError(f"{source}: winding_radius >= 2 and excision_cells >= 1 required",
                          context="scene.validate")
    if sc.flow.beta <= 0:
        raise ConfigError(f"{source}: flow.beta must be positive", context="scene.validate")
    return sc


def load_scene(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such scene file", context="scene.load") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}", context="scene.load") from None
    return parse_scene(data, str(path))


# ---------------------------------------------------------------------------
# custom metric expressions

_FUNCS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "tan": sp.tan,
          "sinh": sp.sinh, "cosh": sp.cosh, "tanh": sp.tanh}
_REAL = sp.symbols("x1 y1 x2 y2", real=True)


def _namespace():
    x1, y1, x2, y2 = _REAL
    ns = dict(_FUNCS)
    ns.update({"x1": x1, "y1": y1, "x2": x2, "y2": y2,
               "z1": x1 + sp.I * y1, "z2": x2 + sp.I * y2,
               "zb1": x1 - sp.I * y1, "zb2": x2 - sp.I * y2,
               "pi": sp.pi, "I": sp.I})
    return ns


def _check_tree(e, text):
    allowed_funcs = tuple(_FUNCS.values())
    for node in sp.preorder_traversal(e):
        if node.is_Symbol:
            if node not in _REAL:
                raise ConfigError(f"unknown symbol {node} in {text!r}", context="scene.metric")
        elif node.is_Number or node in (sp.pi, sp.I, sp.E):
            continue
        elif isinstance(node, (sp.Add, sp.Mul)):
            continue
        elif isinstance(node, sp.Pow):
            if not node.exp.is_Number:
                raise ConfigError(f"only numeric powers are allowed in {text!r}",
                                  context="scene.metric")
        elif isinstance(node, allowed_funcs):
            continue
        else:
            raise ConfigError(f"{type(node).__name__} is outside the metric grammar in {text!r}",
                              context="scene.metric")


def parse_expression(text):
    """Parse one metric entry within the closed grammar."""
    if not isinstance(text, (str, int, float)):
        raise ConfigError(f"metric entries must be strings or numbers, got {text!r}",
                          context="scene.metric")
    src = str(text)
    if "__" in src or any(ch in src for ch in ";:[]{}'\"\\"):
        raise ConfigError(f"illegal characters in {src!r}", context="scene.metric")
    try:
        e = parse_expr(src, local_dict=_namespace(), global_dict={"Integer": sp.Integer,
                       "Float": sp.Float, "Rational": sp.Rational, "Symbol": sp.Symbol},
                       transformations=standard_transformations, evaluate=True)
    except Exception as exc:  # sympy raises a zoo of types here
        raise ConfigError(f"cannot parse {src!r}: {exc}", context="scene.metric") from None
    e = sp.sympify(e)
    _check_tree(e, src)
    return e


def custom_metric(entry):
    """MetricField from ``{name, G: 2x2 entries, kahler?}`` with exact dG."""
    if not isinstance(entry, dict) or "G" not in entry:
        raise ConfigError("custom metric needs a 'G' entry", context="scene.metric")
    rows = entry["G"]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ConfigError("G must be 2x2", context="scene.metric")
    E = [[parse_expression(x) for x in r] for r in rows]
    if sp.simplify(E[0][1] - sp.conjugate(E[1][0])) != 0 or \
            any(sp.simplify(sp.im(E[i][i])) != 0 for i in range(2)):
        raise ConfigError("G must be Hermitian", context="scene.metric")
    flat = [E[0][0], E[0][1], E[1][0], E[1][1]]
    fG = sp.lambdify(_REAL, flat, "numpy")
    fdG = [sp.lambdify(_REAL, [sp.diff(e, s) for e in flat], "numpy") for s in _REAL]
    # dG is stacked over the real directions in the order (x1, y1, x2, y2)
    def _eval(fn, z):
        z = np.asarray(z, dtype=complex)
        args = (z[..., 0].real, z[..., 0].imag, z[..., 1].real, z[..., 1].imag)
        vals = [np.broadcast_to(np.asarray(v, dtype=complex), z.shape[:-1]) for v in fn(*args)]
        return np.stack(vals, -1).reshape(z.shape[:-1] + (2, 2))

    def G(z):
        return _eval(fG, z)

    def dG(z):
        return np.stack([_eval(f, z) for f in fdG], axis=-3)

    name = str(entry.get("name", "custom"))
    return amb.MetricField(name, G, dG, chart=amb.AmbientChart(name),
                           kahler=bool(entry.get("kahler", False)))


def resolve_metric(sc, f):
    """MetricField for a scene (catalogue name, custom mapping or default)."""
    if sc.metric is None:
        return f.ambient()
    if isinstance(sc.metric, str):
        return amb.get_metric(sc.metric)
    return custom_metric(sc.metric)


def resolve_immersion(sc):
    params = dict(sc.params)
    if sc.immersion == "random-trig":
        params.setdefault("seed", sc.seed)
    try:
        return im.get_immersion(sc.immersion, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {sc.immersion}: {exc}",
                          context="scene.resolve") from None
