"""Named experiments: each turns a parameter map into a RunReport plus output files.

The command-line interface is a thin layer over :func:`run`; tests and the
scripts in ``scripts/`` call the same functions directly.
"""

from __future__ import annotations

import os
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import ellipsoid_gauss_curvature, ellipsoid_support, perturbed_sphere
from .convex import (
    DirectionalBound,
    box_firey,
    box_h_convexity,
    example_boxes,
    grid_directions,
    polytope_volume,
    wulff_shape,
    write_off,
    p_mean,
)
from .curvature import curvatures_from_support, verify_surface_identities
from .errors import ConfigurationError, MinklabError
from .identities import (
    beta_bisection,
    case2_G_monitor,
    pinching_beta,
    pinching_table,
    run_identity_suite,
)
from .io import RunReport, load_field, parse_grid, save_field, write_csv, write_dat
from .solver import SolverConfig, residual, solve
from .sphere import ScalarField, SphereGrid, build_grid

SUBCOMMANDS = (
    "solve",
    "flow",
    "verify-identities",
    "pinching-table",
    "example-boxes",
    "ellipsoid-residual",
    "curvature",
    "lemma-check",
)
IDENTITY_TOL = 1e-8
SPHERE_TOL = 1e-6


def default_out_dir() -> Path:
    return Path(os.environ.get("MINKLAB_OUT", "minklab_out"))


@dataclass
class ExperimentSpec:
    name: str
    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: Path | None = None

    def validate(self) -> None:
        if not self.name:
            raise ConfigurationError("experiment name must be nonempty")
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigurationError(f"unknown subcommand {self.subcommand!r}")
        out = Path(self.out_dir) if self.out_dir is not None else default_out_dir()
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigurationError(f"output directory {out} is not writable")
        self.out_dir = out

    def echo(self) -> dict:
        return {
            "name": self.name,
            "subcommand": self.subcommand,
            "params": {k: v for k, v in sorted(self.params.items())},
            "seed": self.seed,
        }


def run(spec: ExperimentSpec, write: bool = True) -> RunReport:
    """Dispatch to the experiment, time it, and write ``<name>.json``.

    Errors are turned into a report with an ``error`` entry (never raised).
    """
    report = RunReport(spec=spec.echo(), version=__version__)
    t0 = time.perf_counter()
    try:
        spec.validate()
        _RUNNERS[spec.subcommand](spec, report)
        # names relative to the output directory keep reports relocatable
        report.files = [Path(f).name for f in report.files]
    except (MinklabError, ValueError, OSError) as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc), "trace": traceback.format_exc(limit=3)}
    report.wall_time = time.perf_counter() - t0
    if write and spec.out_dir is not None:
        path = Path(spec.out_dir) / f"{spec.name}.json"
        report.write(path)
    return report


def _path(spec: ExperimentSpec, suffix: str) -> Path:
    return Path(spec.out_dir) / f"{spec.name}{suffix}"


# --------------------------------------------------------------------------
# parsing of field descriptions


def make_initial(desc: str, grid: SphereGrid, seed: int) -> ScalarField:
    """sphere | ellipsoid:a,b,c | perturbed:eps[,min_ratio] | file:PATH"""
    kind, _, arg = desc.partition(":")
    if kind == "sphere":
        return grid.constant(1.0)
    if kind == "ellipsoid":
        a, b, c = (float(x) for x in arg.split(","))
        return ellipsoid_support(grid, a, b, c)
    if kind == "perturbed":
        parts = [float(x) for x in arg.split(",")] if arg else [0.1]
        return perturbed_sphere(grid, parts[0], seed, min_ratio=parts[1] if len(parts) > 1 else 0.0)
    if kind == "file":
        return load_field(arg, grid)
    raise ConfigurationError(f"unknown init {desc!r}; use sphere, ellipsoid:a,b,c, perturbed:eps or file:PATH")


def make_f(desc: str, grid: SphereGrid) -> ScalarField | None:
    """const:c | file:PATH; const:1 gives None (the default f = 1)."""
    kind, _, arg = desc.partition(":")
    if kind == "const":
        c = float(arg)
        return None if c == 1.0 else grid.constant(c)
    if kind == "file":
        return load_field(arg, grid)
    raise ConfigurationError(f"unknown f {desc!r}; use const:c or file:PATH")


def _f_constant(desc: str):
    kind, _, arg = desc.partition(":")
    return float(arg) if kind == "const" else None


# --------------------------------------------------------------------------
# runners


def _run_solve(spec: ExperimentSpec, report: RunReport) -> None:
    P = spec.params
    grid = build_grid(*parse_grid(P.get("grid", "64x128")))
    u0 = make_initial(P.get("init", "perturbed:0.1"), grid, spec.seed)
    fdesc = P.get("f", "const:1")
    f = make_f(fdesc, grid)
    p = float(P.get("p", 0.0))
    mode = "flow" if spec.subcommand == "flow" else P.get("mode", "newton")
    cfg = SolverConfig(
        p=p,
        u0=u0,
        f=f,
        mode=mode,
        omega=float(P.get("omega", 0.3)),
        dt=float(P.get("dt", 0.1)),
        tol=float(P.get("tol", 1e-9)),
        max_iter=int(P.get("max_iter", 50_000)),
        precondition=bool(P.get("precondition", True)),
    )
    init_pinching = float(curvatures_from_support(u0).pinching.min())
    res = solve(cfg)
    u = res.u_final
    fc = _f_constant(fdesc)
    m = report.metrics
    m.update(
        converged=res.converged,
        iterations=res.iterations,
        final_residual=res.final_residual,
        message=res.message,
        alpha=res.alpha,
        initial_min_pinching=init_pinching,
        residual_trace=res.residual_trace,
        q_trace=res.q_trace,
        g_trace=res.g_trace,
        pinching_trace=res.pinching_trace,
        solve_time=res.wall_time,
    )
    report.checks["converged"] = res.converged
    if fc is not None and res.converged:
        radius = fc ** (1.0 / (3.0 - p))
        m["distance_to_round"] = float(np.max(np.abs(u.values - radius)))
        m["round_radius"] = radius
    if fc is not None and -1.0 <= p <= 0.0:
        report.checks["round_solution"] = m.get("distance_to_round", np.inf) <= SPHERE_TOL
        q = np.asarray(res.q_trace)
        tail = np.diff(q[100:]) if q.size > 101 else np.zeros(0)
        m["q_max_increase_after_100"] = float(tail.max()) if tail.size else 0.0
        report.checks["q_nonincreasing_after_100"] = bool(np.all(tail <= 1e-8))
        if p == -1.0:
            _, osc = case2_G_monitor(u)
            m["G_oscillation"] = osc
            report.checks["G_constant"] = osc <= SPHERE_TOL
    if fc is not None and 0.0 < p < 1.0:
        beta = pinching_beta(p).beta
        m["beta"] = beta
        if init_pinching >= beta:
            report.checks["round_solution"] = m.get("distance_to_round", np.inf) <= SPHERE_TOL
            report.checks["pinching_above_beta"] = bool(np.min(res.pinching_trace) >= beta)
    save_field(u, _path(spec, "_u.field"))
    k = np.arange(len(res.residual_trace))
    write_dat(
        _path(spec, "_trace.dat"),
        {
            "iteration": k,
            "residual": res.residual_trace,
            "q_max": res.q_trace,
            "g_oscillation": res.g_trace,
            "min_pinching": res.pinching_trace,
        },
    )
    report.files += [str(_path(spec, "_u.field")), str(_path(spec, "_trace.dat"))]


def _run_identities(spec: ExperimentSpec, report: RunReport) -> None:
    n = int(spec.params.get("samples", 100_000))
    table = run_identity_suite(n, spec.seed)
    report.metrics["samples"] = n
    report.metrics["max_defects"] = table
    report.metrics["worst"] = max(table.values())
    report.checks["all_identities"] = report.metrics["worst"] <= IDENTITY_TOL


def _run_pinching(spec: ExperimentSpec, report: RunReport) -> None:
    P = spec.params
    rows = pinching_table(float(P.get("q_min", 0.05)), float(P.get("q_max", 0.95)), int(P.get("steps", 19)))
    oracle = [beta_bisection(r["q"]) for r in rows]
    agree = max(abs(r["beta"] - b) for r, b in zip(rows, oracle))
    report.metrics.update(rows=rows, max_bisection_gap=agree)
    report.checks["beta_above_threshold"] = all(r["beta"] > r["beta_t"] for r in rows)
    report.checks["bisection_agrees"] = agree <= 1e-12
    write_csv(_path(spec, ".csv"), rows)
    write_dat(_path(spec, ".dat"), {k: [r[k] for r in rows] for k in rows[0]})
    report.files += [str(_path(spec, ".csv")), str(_path(spec, ".dat"))]


def _run_boxes(spec: ExperimentSpec, report: RunReport) -> None:
    P = spec.params
    a, eps = float(P.get("a", 1.0)), float(P.get("eps", 0.5))
    lam, p = float(P.get("lambda", 0.5)), float(P.get("p", 0.5))
    K, L = example_boxes(a, eps)
    comb = box_firey(K, L, lam, p)
    gap = comb.volume - K.volume ** (1 - lam) * L.volume**lam
    grid = build_grid(*parse_grid(P.get("grid", "64x128")))
    dirs = grid_directions(grid, with_axes=True)
    gK, gL = K.bound(dirs), L.bound(dirs)
    poly = wulff_shape(DirectionalBound(dirs, p_mean(gK.bounds, gL.bounds, lam, p)))
    v_wulff = polytope_volume(poly)
    hc = box_h_convexity(a, eps, p)
    report.metrics.update(
        gap=gap,
        box_volume=comb.volume,
        wulff_volume=v_wulff,
        wulff_gap=v_wulff - K.volume ** (1 - lam) * L.volume**lam,
        face_plus=comb.plus,
        face_minus=comb.minus,
        h_second_diff_min=float(hc.second_diff.min()),
        h_second_diff_max=float(hc.second_diff.max()),
    )
    if p <= 1:
        report.checks["wulff_matches_box"] = abs(v_wulff - comb.volume) <= 1e-6
    report.checks["h_endpoints_exact"] = hc.endpoints_exact
    report.checks["h_convexity_sign"] = hc.sign_ok
    write_off(poly, _path(spec, ".off"))
    write_dat(_path(spec, "_h.dat"), {"lambda": hc.lam, "h": hc.h})
    report.files += [str(_path(spec, ".off")), str(_path(spec, "_h.dat"))]


def _grids(text: str) -> list[tuple[int, int]]:
    return [parse_grid(g) for g in text.split(",")]


def _orders(hs, errs) -> list[float]:
    return [float(np.log(e0 / e1) / np.log(h0 / h1)) for h0, h1, e0, e1 in zip(hs, hs[1:], errs, errs[1:])]


def ellipsoid_residual_study(a, b, c, p, grids):
    """L_inf residual and curvature error of an ellipsoid on each grid, with orders."""
    hs, res, kerr = [], [], []
    for nt, nph in grids:
        g = build_grid(nt, nph)
        u = ellipsoid_support(g, a, b, c)
        f = None if abs(a * b * c - 1.0) < 1e-14 else g.constant((a * b * c) ** 2)
        res.append(residual(u, f, p).max_abs())
        K = curvatures_from_support(u).K
        kerr.append(float(np.max(np.abs(K - ellipsoid_gauss_curvature(g.nodes, a, b, c)))))
        hs.append(g.dtheta)
    return hs, res, kerr


def _run_ellipsoid(spec: ExperimentSpec, report: RunReport) -> None:
    P = spec.params
    a, b, c = (float(P.get(k, v)) for k, v in (("a", 1.3), ("b", 1.0), ("c", 1 / 1.3)))
    p = float(P.get("p", -3.0))
    hs, res, kerr = ellipsoid_residual_study(a, b, c, p, _grids(P.get("grids", "64x128,128x256")))
    orders = _orders(hs, res)
    report.metrics.update(h=hs, residual=res, residual_orders=orders, K_error=kerr, K_orders=_orders(hs, kerr))
    if p == -3.0:
        report.checks["residual_order"] = bool(orders) and min(orders) >= 1.8
    write_dat(_path(spec, ".dat"), {"h": hs, "residual": res, "K_error": kerr})
    report.files.append(str(_path(spec, ".dat")))


def _run_curvature(spec: ExperimentSpec, report: RunReport) -> None:
    P = spec.params
    grid = build_grid(*parse_grid(P.get("grid", "64x128")))
    u = make_initial(P.get("init", "sphere"), grid, spec.seed)
    cf = curvatures_from_support(u)
    kdet = float(np.max(np.abs(cf.K * cf.det_r - 1.0)))
    report.metrics.update(
        K_min=float(cf.K.min()),
        K_max=float(cf.K.max()),
        H_min=float(cf.H.min()),
        H_max=float(cf.H.max()),
        min_pinching=float(cf.pinching.min()),
        K_det_r_defect=kdet,
        volume=grid.integrate(u.values * cf.det_r) / 3.0,
    )
    report.checks["K_det_r"] = kdet <= 1e-10
    t, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    write_dat(
        _path(spec, ".dat"),
        {
            "theta": t.ravel(),
            "phi": ph.ravel(),
            "u": u.flat,
            "K": cf.K.ravel(),
            "H": cf.H.ravel(),
            "lam1": cf.lam1.ravel(),
            "lam2": cf.lam2.ravel(),
        },
    )
    report.files.append(str(_path(spec, ".dat")))


def lemma_study(a, b, c, grids):
    hs, gd, hd = [], [], []
    for nt, nph in grids:
        g = build_grid(nt, nph)
        rep = verify_surface_identities(ellipsoid_support(g, a, b, c))
        hs.append(g.dtheta)
        gd.append(rep.gradient_defect)
        hd.append(rep.hessian_defect)
    return hs, gd, hd


def _run_lemma(spec: ExperimentSpec, report: RunReport) -> None:
    P = spec.params
    a, b, c = (float(P.get(k, v)) for k, v in (("a", 1.2), ("b", 1.0), ("c", 0.9)))
    hs, gd, hd = lemma_study(a, b, c, _grids(P.get("grids", "32x64,64x128")))
    og, oh = _orders(hs, gd), _orders(hs, hd)
    report.metrics.update(h=hs, gradient_defect=gd, hessian_defect=hd, gradient_orders=og, hessian_orders=oh)
    report.checks["defect_order"] = bool(og) and min(og + oh) >= 1.8
    write_dat(_path(spec, ".dat"), {"h": hs, "gradient_defect": gd, "hessian_defect": hd})
    report.files.append(str(_path(spec, ".dat")))


_RUNNERS = {
    "solve": _run_solve,
    "flow": _run_solve,
    "verify-identities": _run_identities,
    "pinching-table": _run_pinching,
    "example-boxes": _run_boxes,
    "ellipsoid-residual": _run_ellipsoid,
    "curvature": _run_curvature,
    "lemma-check": _run_lemma,
}
