"""Command-line entry point: ``minklab <subcommand> [flags]``.

Every run writes ``<name>.json`` (the run report) plus data files into the
output directory (``--out``, else ``$MINKLAB_OUT``, else ``./minklab_out``).
The exit code is 0 when every check attached to every experiment passes,
1 when a check fails and 2 when an experiment raised an error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .experiments import ExperimentSpec, default_out_dir, run

_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _common(sp: argparse.ArgumentParser, name: str) -> None:
    sp.add_argument("--name", default=name, help="experiment name, used for output file names")
    sp.add_argument("--out", default=None, help="output directory; unset means $MINKLAB_OUT, then ./minklab_out")
    sp.add_argument("--config", default=None, help="file of key=value lines; command-line flags win")
    sp.add_argument("--seed", default="0", help="integer seed, or a comma list for a sweep")
    sp.add_argument("--jobs", type=int, default=1, help="parallel experiments in a sweep")


def _solver_flags(sp: argparse.ArgumentParser, flow: bool) -> None:
    sp.add_argument("--p", default="0", help="exponent p, or a comma list for a sweep")
    if not flow:
        sp.add_argument("--mode", default="newton", choices=["newton", "fixed_point", "flow"], help="solver")
    sp.add_argument("--grid", default="64x128", help="n_theta x n_phi")
    sp.add_argument("--omega", type=float, default=0.3, help="fixed-point relaxation in (0, 1]")
    sp.add_argument("--dt", type=float, default=0.1, help="flow time step")
    sp.add_argument("--tol", type=float, default=1e-9, help="L_inf residual tolerance")
    sp.add_argument("--max-iter", type=int, default=50_000, help="iteration cap")
    sp.add_argument(
        "--init",
        default="perturbed:0.1",
        help="sphere | ellipsoid:a,b,c | perturbed:eps[,min_ratio] | file:PATH",
    )
    sp.add_argument("--f", default="const:1", help="const:c | file:PATH")
    sp.add_argument(
        "--precondition",
        type=lambda s: _BOOL[s.lower()],
        default="true",
        help="chord preconditioning of the fixed-point iteration (true/false)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minklab",
        description="Support-function experiments for det(u_ij + u delta_ij) = f u^(p-1) on S^2.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"minklab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    sp = sub.add_parser("solve", help="solve the equation", formatter_class=fmt)
    _common(sp, "solve")
    _solver_flags(sp, flow=False)

    sp = sub.add_parser("flow", help="solve through the normalized curvature flow", formatter_class=fmt)
    _common(sp, "flow")
    _solver_flags(sp, flow=True)

    sp = sub.add_parser("verify-identities", help="random suites for the algebraic identities", formatter_class=fmt)
    _common(sp, "identities")
    sp.add_argument("--samples", type=int, default=100_000, help="random samples per suite")

    sp = sub.add_parser("pinching-table", help="pinching constant table (CSV)", formatter_class=fmt)
    _common(sp, "pinching")
    sp.add_argument("--q-min", type=float, default=0.05, help="first q = 1 - p")
    sp.add_argument("--q-max", type=float, default=0.95, help="last q")
    sp.add_argument("--steps", type=int, default=19, help="number of rows")

    sp = sub.add_parser("example-boxes", help="Firey combination of a cube and its translate", formatter_class=fmt)
    _common(sp, "boxes")
    sp.add_argument("--a", type=float, default=1.0, help="cube half-width")
    sp.add_argument("--eps", type=float, default=0.5, help="translation along e_1")
    sp.add_argument("--lambda", dest="lambda_", type=float, default=0.5, help="combination weight")
    sp.add_argument("--p", type=float, default=0.5, help="exponent of the combination")
    sp.add_argument("--grid", default="64x128", help="directions for the Wulff-shape cross-check")

    sp = sub.add_parser("ellipsoid-residual", help="residual of an ellipsoid under grid refinement", formatter_class=fmt)
    _common(sp, "ellipsoid")
    sp.add_argument("--a", type=float, default=1.3, help="semi-axis a")
    sp.add_argument("--b", type=float, default=1.0, help="semi-axis b")
    sp.add_argument("--c", type=float, default=1 / 1.3, help="semi-axis c")
    sp.add_argument("--p", type=float, default=-3.0, help="exponent p")
    sp.add_argument("--grids", default="64x128,128x256", help="comma list of NxM grids")

    sp = sub.add_parser("curvature", help="curvature fields of a support function", formatter_class=fmt)
    _common(sp, "curvature")
    sp.add_argument("--grid", default="64x128", help="n_theta x n_phi")
    sp.add_argument("--init", default="sphere", help="sphere | ellipsoid:a,b,c | perturbed:eps | file:PATH")

    sp = sub.add_parser("lemma-check", help="surface identities for grad u and its Hessian", formatter_class=fmt)
    _common(sp, "lemma")
    sp.add_argument("--a", type=float, default=1.2, help="semi-axis a")
    sp.add_argument("--b", type=float, default=1.0, help="semi-axis b")
    sp.add_argument("--c", type=float, default=0.9, help="semi-axis c")
    sp.add_argument("--grids", default="32x64,64x128", help="comma list of NxM grids")
    return parser


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise SystemExit(f"{path}:{lineno}: expected key=value, got {line!r}")
        k, v = (x.strip() for x in s.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config(args.config)
        if "lambda" in values:
            values["lambda_"] = values.pop("lambda")
        sub = parser._subparsers._group_actions[0].choices[args.subcommand]
        known = {a.dest for a in sub._actions}
        unknown = set(values) - known
        if unknown:
            parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
        # string defaults go through each flag's type conversion
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


_SKIP = {"subcommand", "name", "out", "config", "seed", "jobs"}


def specs_from_args(args: argparse.Namespace) -> list[ExperimentSpec]:
    params = {k: v for k, v in vars(args).items() if k not in _SKIP}
    if "lambda_" in params:
        params["lambda"] = params.pop("lambda_")
    seeds = [int(s) for s in str(args.seed).split(",")]
    out = Path(args.out) if args.out else default_out_dir()
    ps = [None]
    if args.subcommand in ("solve", "flow"):
        ps = [float(x) for x in str(args.p).split(",")]
    sweep = len(seeds) * len(ps) > 1
    specs = []
    for p, seed in itertools.product(ps, seeds):
        prm = dict(params)
        name = args.name
        if p is not None:
            prm["p"] = p
            if sweep:
                name = f"{name}_p{p:g}"
        if sweep and len(seeds) > 1:
            name = f"{name}_s{seed}"
        specs.append(ExperimentSpec(name, args.subcommand, prm, seed, out))
    return specs


def _summary(report) -> dict:
    d = report.to_dict()
    scalars = {k: v for k, v in d["metrics"].items() if not isinstance(v, (list, dict))}
    return {"name": d["spec"]["name"], "passed": d["passed"], "checks": d["checks"], "metrics": scalars, "error": d["error"]}


def main(argv=None) -> int:
    args = parse_args(argv)
    specs = specs_from_args(args)
    if args.jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            reports = list(ex.map(run, specs))
    else:
        reports = [run(s) for s in specs]
    for r in reports:
        print(json.dumps(_summary(r), sort_keys=True))
    if any(r.error is not None for r in reports):
        for r in reports:
            if r.error is not None:
                print(f"error in {r.spec['name']}: {r.error['type']}: {r.error['message']}", file=sys.stderr)
        return 2
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
