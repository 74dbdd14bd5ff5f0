"""Grid-refinement orders for the ellipsoid residual and the surface identities.

    python3 scripts/convergence_study.py --grids 16x32,32x64,64x128,128x256
"""

import argparse

import numpy as np

from minklab.experiments import ellipsoid_residual_study, lemma_study
from minklab.io import parse_grid


def orders(hs, errs):
    return [np.log(e0 / e1) / np.log(h0 / h1) for h0, h1, e0, e1 in zip(hs, hs[1:], errs, errs[1:])]


def table(title, hs, cols):
    print(title)
    names = list(cols)
    print(f"{'h':>10} " + " ".join(f"{n:>16} {'order':>6}" for n in names))
    ords = {n: [np.nan] + orders(hs, cols[n]) for n in names}
    for k, h in enumerate(hs):
        print(f"{h:10.5f} " + " ".join(f"{cols[n][k]:16.6e} {ords[n][k]:6.2f}" for n in names))
    print()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grids", default="16x32,32x64,64x128,128x256")
    ap.add_argument("--axes", default="1.3,1.0,0.7692307692307692", help="ellipsoid a,b,c for the residual")
    ap.add_argument("--p", type=float, default=-3.0)
    args = ap.parse_args(argv)
    grids = [parse_grid(g) for g in args.grids.split(",")]
    a, b, c = (float(x) for x in args.axes.split(","))

    hs, res, kerr = ellipsoid_residual_study(a, b, c, args.p, grids)
    table(f"ellipsoid ({a:g}, {b:g}, {c:g}), p = {args.p:g}", hs, {"residual": res, "K_error": kerr})
    hs, gd, hd = lemma_study(1.2, 1.0, 0.9, grids)
    table("surface identities on (1.2, 1.0, 0.9)", hs, {"gradient": gd, "hessian": hd})


if __name__ == "__main__":
    main()
