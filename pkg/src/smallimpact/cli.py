"""Command line entry point: ``smallimpact run <config>`` and ``smallimpact list-presets``."""
import argparse
import json
import os
import sys

from . import experiments, presets
from .config import load_config, with_overrides
from .errors import ConfigError, SimulationError
from .simkit import write_csv, write_summary

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_SIM = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    parser = _Parser(prog="smallimpact", description="Small price impact experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", default=None, help="output directory (default: SMALLIMPACT_OUT_DIR or .)")
    lp = sub.add_parser("list-presets", help="list model presets")
    lp.add_argument("--json", action="store_true")
    return parser


def _list_presets(as_json):
    table = presets.listing()
    if as_json:
        print(json.dumps(table, indent=2, sort_keys=True))
        return EXIT_OK
    for name, entry in table.items():
        params = ", ".join(f"{k}={v}" for k, v in entry["params"].items())
        print(f"{name:<16} {entry['description']}\n{'':<16} {params}")
    return EXIT_OK


def _run(args):
    try:
        seed = args.seed
        if seed is None and os.environ.get("SMALLIMPACT_SEED"):
            seed = int(os.environ["SMALLIMPACT_SEED"])
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = with_overrides(load_config(args.config), seed=seed)
        out_dir = args.out or os.environ.get("SMALLIMPACT_OUT_DIR") or "."
        if not os.path.isdir(out_dir):
            raise ConfigError(f"output directory {out_dir!r} does not exist")
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = experiments.run(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    prefix = os.path.join(out_dir, cfg.output.prefix)
    write_csv(prefix + "_data.csv", result.header, result.rows)
    write_summary(prefix + "_summary.json", result.summary(cfg))
    for c in result.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}")
    return EXIT_OK if result.passed else EXIT_ASSERT


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list-presets":
        return _list_presets(args.json)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
