"""Simulated CE loss of the asymptotic policy against the expansion over a lambda sweep.

    python scripts/ce_vs_lambda.py --lambdas 1e-2 1e-3 1e-4 --paths 4000 --offset 0.5

Writes a CSV with one row per lambda to stdout.
"""
import argparse
import csv
import math
import sys

from smallimpact import corrector as co
from smallimpact import presets, simkit as sk
from smallimpact.frictionless import StatePoint


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambdas", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    ap.add_argument("--paths", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--offset", type=float, default=0.0, help="initial holding minus target")
    ap.add_argument("--y0", type=float, default=0.5)
    args = ap.parse_args()
    p, model, sol = presets.build("ou-myopic", y0=args.y0)
    psi = co.kolmogorov_u_grid(sol)
    th0 = sol.theta0(0.0, [p.s0], [p.y0], 0.0)
    zeta = StatePoint(0.0, [p.s0], [p.y0], 0.0, th0 + args.offset)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["lambda", "ce_simulated", "stderr", "ce_theory", "ratio"])
    for lam in args.lambdas:
        kappa = math.sqrt(p.sigma_s ** 2 * p.eta / (2 * lam * p.impact))
        n = max(200, math.ceil(kappa * p.T / 0.02))
        est = sk.policy_ce_loss(sol, zeta, lam, sk.McConfig(args.paths, p.T / n, seed=args.seed))
        th = co.ce_theory(sol, zeta, lam, psi).ce
        out.writerow([repr(float(v)) for v in (lam, est.ce_loss, est.stderr, th, est.ce_loss / th)])


if __name__ == "__main__":
    main()
