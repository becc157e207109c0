"""Command-line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    estimate_break_curve,
    load_config,
    run_experiment,
    write_break_curve,
    write_results,
)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graph-coupler",
                                description="Coupled graph/tree explorations and convergence experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run a full experiment and write summary.csv and replications.csv"),
                            ("break-curve", "estimate P(tau <= k) over the n grid and write break_curve.csv")):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, help="JSON experiment configuration")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--jobs", type=int, default=1, help="worker processes")
        s.add_argument("--seed", type=int, default=None, help="override the configured seed (u64)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    if args.command == "run":
        summary, records = write_results(run_experiment(cfg, args.jobs), out)
        print(f"wrote {summary} and {records}")
    else:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "break_curve.csv"
        write_break_curve(estimate_break_curve(cfg, args.jobs), path)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
