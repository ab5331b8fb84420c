"""Log-log error slopes of the order-2 and order-3 Zassenhaus propagators.

Sweeps the coupling and prints one line per (Omega, order) pair. Example:

    python3 scripts/error_order_study.py --dim 5 --omegas 0.25 0.5 1.0
"""
import argparse

import numpy as np

from jcdiss import ModelParams, TruncationConfig, fit_error_order
from jcdiss.states import random_density

TIMES = [0.025, 0.05, 0.1, 0.2, 0.4]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=5)
    ap.add_argument("--omegas", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0])
    ap.add_argument("--mu", type=float, default=0.3)
    ap.add_argument("--nu", type=float, default=0.1)
    ap.add_argument("--support", type=int, default=None, help="cavity support of the random state (default dim - 2)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    support = args.support or args.dim - 2
    rho = random_density(np.random.default_rng(args.seed), args.dim, support)
    print(f"{'Omega':>6} {'order':>5} {'slope':>8} {'r^2':>8} {'max err':>10}  notes")
    for om in args.omegas:
        p = ModelParams(1.0, om, args.mu, args.nu, TruncationConfig(args.dim))
        for order in (2, 3):
            fit = fit_error_order(p, rho, TIMES, order=order)
            notes = "; ".join(fit.notes)
            print(f"{om:6.3f} {order:5d} {fit.slope:8.3f} {fit.r_squared:8.5f} {max(fit.errors):10.3e}  {notes}")


if __name__ == "__main__":
    main()
