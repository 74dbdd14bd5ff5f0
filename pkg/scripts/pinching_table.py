"""Print the pinching constant beta(q), its threshold and C = beta / (1 + beta).

    python3 scripts/pinching_table.py --steps 19
"""

import argparse

from minklab.identities import beta_bisection, pinching_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--q-min", type=float, default=0.05)
    ap.add_argument("--q-max", type=float, default=0.95)
    ap.add_argument("--steps", type=int, default=19)
    args = ap.parse_args(argv)
    print(f"{'q':>6} {'p':>6} {'tau':>10} {'beta':>12} {'beta_t':>10} {'C':>10} {'|beta-bisect|':>14}")
    for r in pinching_table(args.q_min, args.q_max, args.steps):
        gap = abs(r["beta"] - beta_bisection(r["q"]))
        print(
            f"{r['q']:6.3f} {r['p']:6.3f} {r['tau']:10.7f} {r['beta']:12.9f} {r['beta_t']:10.7f} {r['C']:10.7f} {gap:14.1e}"
        )


if __name__ == "__main__":
    main()
