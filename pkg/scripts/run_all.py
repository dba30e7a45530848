"""Run every config in configs/ through the CLI and print a one-line verdict each.

    python scripts/run_all.py [--out DIR] [--workers N] [--skip-slow]
"""
import argparse
import pathlib
import sys

from smallimpact import cli

ROOT = pathlib.Path(__file__).resolve().parents[1]
SLOW = {"expansion_check.yaml"}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--skip-slow", action="store_true")
    args = ap.parse_args()
    pathlib.Path(args.out).mkdir(parents=True, exist_ok=True)
    codes = {}
    for cfg in sorted((ROOT / "configs").glob("*.yaml")):
        if args.skip_slow and cfg.name in SLOW:
            continue
        print(f"== {cfg.name}")
        codes[cfg.name] = cli.main(["run", str(cfg), "--out", args.out, "--workers", str(args.workers)])
    for name, code in codes.items():
        print(f"{name:<28} exit {code}")
    return max(codes.values(), default=0)


if __name__ == "__main__":
    sys.exit(main())
