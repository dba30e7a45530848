"""Residual convergence of the frictionless and second-corrector grid solutions.

Prints HJB, FOC and second-corrector residuals at a fixed interior node on
dyadic refinements, with observed orders, for a few correlations.
"""
import argparse

from smallimpact import presets
from smallimpact.experiments import residual_order
from smallimpact.frictionless import PdeGrid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--rho", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    args = ap.parse_args()
    base = PdeGrid(-2.4, 2.4, 49, 20)
    print("rho   kind  residuals -> orders")
    for rho in args.rho:
        model = presets.ou_model(presets.preset_params("ou-myopic", rho=rho))
        for kind in ("hjb", "foc", "u"):
            res, orders = residual_order(model, base, levels=args.levels, kind=kind)
            print(f"{rho:4.2f}  {kind:<4}  " + "  ".join(f"{r:.3e}" for r in res)
                  + "  ->  " + "  ".join(f"{o:.3f}" for o in orders))


if __name__ == "__main__":
    main()
