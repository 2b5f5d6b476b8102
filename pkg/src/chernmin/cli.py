"""Command-line front end.

    chernmin run SCENE.yaml [--grid N] [--tol-chern X] [--seed S]
                            [--emit-plots] [--dump-fields] [--out DIR]
    chernmin plot REPORT [--fields alpha,K] [--out DIR]

``run`` writes ``<out>/<name>.report`` and exits 0 iff every gate passes.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import flow as fl
from . import immersion as im
from . import webster as wb
from .angle import analyze
from .errors import ChernMinError, ConfigError, MissingDump
from .io import read_planes, read_report, write_planes, write_report
from .scene import load_scene, resolve_immersion, resolve_metric

DUMP_FIELDS = ("alpha", "sin_half", "K", "K_perp", "K_plus_Kperp", "H_C", "sin_balance",
               "active")


def _fields(jet, angle, rep, sc):
    """Scalar fields for dumps; K_perp and residuals only where defined."""
    dom = jet.dom
    K = wb.gauss_curvature(jet, crosscheck=False)
    out = {"alpha": angle.alpha, "sin_half": angle.mag_complex, "K": K,
           "H_C": np.linalg.norm(im.chern_mean_curvature(jet), axis=-1),
           "active": dom.active.astype(float)}
    excise = wb.excision_mask(dom, angle.singular_points, sc.excision_cells)
    keep = dom.active & ~excise & wb.interior_mask(dom)
    try:
        r_sin, _, Kp, mask = wb.laplacian_identity_residuals(
            jet, angle, keep, bool(angle.singular_points))
        out["K_perp"] = np.where(mask, Kp, np.nan)
        out["K_plus_Kperp"] = np.where(mask, K + Kp, np.nan)
        out["sin_balance"] = np.where(mask, r_sin, np.nan)
    except ChernMinError:
        pass
    return out


def run_scene(sc, outdir="."):
    """Execute a scene; returns ``(exit_code, report_path, sections)``."""
    os.makedirs(outdir, exist_ok=True)
    f = resolve_immersion(sc)
    metric = resolve_metric(sc, f)
    dom = f.domain(sc.grid)
    tol = sc.tolerances
    sections = {"scene": sc.effective(), "domain": dom.describe(),
                "subject": {"immersion": f.name, "params": f.params, "metric": metric.name,
                            "genus": f.genus}}
    samples = None
    conformal_ok = None
    if sc.flow.run:
        fam = fl.family_for(f, dom, modes=sc.flow.modes, degree=sc.flow.degree)
        fam.metric = metric
        c0 = fl.perturbed_seed(fam, sc.flow.amplitude, sc.seed)
        cfg = fl.FlowConfig(beta=sc.flow.beta, max_iter=sc.flow.max_iter,
                            energy_tol=sc.flow.energy_tol)
        st = fl.minimize(fam, c0, cfg)
        samples = st.samples
        # descent only controls conformality in the integrated sense
        conformal_ok = not st.flags["non_conformal"]
        E0, p0, _ = st.history[0]
        sections["flow"] = {"parameters": fam.size, "iterations": st.iteration,
                            "accepted_steps": st.accepted, "initial_energy": E0,
                            "initial_penalty": p0, "energy": st.energy,
                            "penalty": st.penalty,
                            "monotone": fl.history_monotone(st, cfg.beta),
                            "flags": {k: v for k, v in sorted(st.flags.items())}}
    jet = im.pullback(f, dom, metric=metric, samples=samples,
                      conformal_tol=tol.conformal, strict=False)
    if conformal_ok is None:
        conformal_ok = not jet.flags["non_conformal"]
    angle = analyze(jet, tol.detect, sc.winding_radius)
    rep = wb.verify(jet, angle if conformal_ok else None,
                    tol_chern=tol.chern, excise_cells=sc.excision_cells,
                    tol_detect=tol.detect, radius_cells=sc.winding_radius)
    sections["report"] = rep.as_dict()
    sections["report"]["conformality_max"] = float(np.max(np.abs(jet.conformality)[dom.active]))
    gates = {"conformal": conformal_ok,
             "stokes": rep.stokes_residual < tol.stokes}
    if f.genus in (0, 1):
        gates["gauss_bonnet"] = abs(rep.chi_T - (2 - 2 * f.genus)) < tol.rounding
    if sc.require_chern_minimal:
        gates["chern_minimal"] = rep.classification != "not-chern-minimal"
    if rep.classification == "generic":
        gates["webster"] = bool(rep.accepted and rep.residual_thm31 < tol.rounding
                                and rep.residual_thm42 < tol.rounding)
        sections["webster"] = {"status": "VERIFIED" if gates["webster"] else "FAILED"}
    else:
        sections["webster"] = {"status": "SKIPPED",
                               "reason": f"classification {rep.classification}"}
    sections["gates"] = dict(gates)
    report_path = os.path.join(outdir, f"{sc.name}.report")
    if sc.dump_fields or sc.emit_plots:
        dumps = {}
        for name, arr in _fields(jet, angle, rep, sc).items():
            fn = f"{sc.name}.{name}.cmf"
            write_planes(os.path.join(outdir, fn), np.asarray(arr, dtype=float))
            dumps[name] = fn
        sections["dumps"] = {"files": dumps,
                             "charts": [[c.name, c.w[0, 0].real, c.w[0, 0].imag, c.du, c.dv]
                                        for c in dom.charts]}
    code = 0 if all(gates.values()) else 1
    sections["result"] = {"exit_code": code}
    write_report(report_path, sections, header=["chernmin verification report"])
    if sc.emit_plots:
        plot_report(report_path, outdir=outdir)
    return code, report_path, sections


def plot_report(report_path, fields=None, outdir=None):
    """One PNG per dumped scalar field; returns the written paths."""
    from .plotting import heatmap

    rep = read_report(report_path)
    if "dumps" not in rep:
        raise MissingDump(f"{report_path}: report has no field dumps (run with --dump-fields)",
                          context="cli.plot")
    base = os.path.dirname(os.path.abspath(report_path))
    outdir = base if outdir is None else outdir
    os.makedirs(outdir, exist_ok=True)
    files = rep["dumps"]["files"]
    charts = [(c[0], complex(c[1], c[2]), c[3], c[4]) for c in rep["dumps"]["charts"]]
    active = read_planes(os.path.join(base, files["active"])) > 0.5 if "active" in files else None
    pts = []
    for p in rep.get("report", {}).get("singular_points", []) or []:
        label = f"{'C' if p['kind'] == 'complex' else 'A'}{p['order']}"
        pts.append((p["chart"], complex(*p["location"]), label))
    want = [k for k in files if k != "active"] if fields is None else list(fields)
    out = []
    name = rep["scene"]["name"]
    for fld in want:
        if fld not in files:
            raise MissingDump(f"field {fld!r} was not dumped", context="cli.plot")
        vals = read_planes(os.path.join(base, files[fld]))
        path = os.path.join(outdir, f"{name}.{fld}.png")
        heatmap(path, vals, charts, title=f"{name}: {fld}", points=pts, active=active)
        out.append(path)
    return out


def _parser():
    p = argparse.ArgumentParser(prog="chernmin",
                                description="Chern-minimal surface verification pipeline")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scene file and write its report")
    r.add_argument("scene")
    r.add_argument("--grid", type=int)
    r.add_argument("--tol-chern", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--emit-plots", action="store_true")
    r.add_argument("--dump-fields", action="store_true")
    r.add_argument("--out", default=".")
    q = sub.add_parser("plot", help="render heatmaps from a report's field dumps")
    q.add_argument("report")
    q.add_argument("--fields", help="comma-separated field names")
    q.add_argument("--out")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "run":
            sc = load_scene(args.scene)
            over = {}
            if args.grid is not None:
                over["grid"] = args.grid
            if args.seed is not None:
                over["seed"] = args.seed
            if args.emit_plots:
                over["emit_plots"] = True
            if args.dump_fields:
                over["dump_fields"] = True
            if args.tol_chern is not None:
                over["tolerances"] = replace(sc.tolerances, chern=args.tol_chern)
            sc = replace(sc, **over)
            from .scene import validate

            validate(sc, args.scene)
            code, path, sec = run_scene(sc, args.out)
            gates = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in sec["gates"].items())
            print(f"{sc.name}: {sec['report']['classification']}, webster "
                  f"{sec['webster']['status']}; {gates}")
            print(f"report: {path}")
            return code
        fields = args.fields.split(",") if args.fields else None
        for path in plot_report(args.report, fields, args.out):
            print(path)
        return 0
    except ConfigError as exc:
        print(f"configuration error ({exc.context}): {exc}", file=sys.stderr)
        return 2
    except ChernMinError as exc:
        print(f"{type(exc).__name__} in {exc.context}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
