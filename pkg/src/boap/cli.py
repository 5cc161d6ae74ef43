"""Command-line entry point.

Subcommands:
  run        execute an experiment config (seeded repeats of each method)
  summarize  aggregate a results directory into summary/curves tables
  report     render regret figures from a results directory
  fixtures   write the bundled dataset fixtures (and regret references)
  serve      start the live preference-session service
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def _cmd_run(args) -> int:
    from .harness import ExperimentConfig, run_experiment

    config = ExperimentConfig.from_yaml(args.config)
    if args.output is not None:
        config.output_dir = args.output
    if args.seed is not None:
        config.seed = args.seed
        config.seeds = None
    result = run_experiment(config, parallelism=args.jobs)
    for method, curve in sorted(result["curves"].items()):
        final = curve.final_mean
        shown = "n/a" if final is None else f"{final:.6g}"
        print(f"{method}: {len(curve.per_seed)} runs, final mean regret {shown}")
    if result["failures"]:
        for method, seed in result["failures"]:
            print(f"FAILED: {method} seed {seed}", file=sys.stderr)
        return 1
    return 0


def _cmd_summarize(args) -> int:
    from .harness import summarize

    result = summarize(args.results)
    cols = [
        "method",
        "repeats",
        "final_regret_mean",
        "final_regret_stderr",
        "wins_vs_bo_ts",
        "losses_vs_bo_ts",
        "wall_seconds",
    ]
    print("\t".join(cols))
    for row in result["rows"]:
        print(
            "\t".join(
                "" if row[c] is None else (f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c]))
                for c in cols
            )
        )
    for warning in result["warnings"]:
        print(f"WARNING: {warning}", file=sys.stderr)
    print(f"\nwrote {Path(args.results) / 'summary.csv'} and curves.csv")
    return 0


def _cmd_report(args) -> int:
    from .report import render_report

    written = render_report(args.results, args.output)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_fixtures(args) -> int:
    from .fixtures import write_all, write_true_optima

    info = write_all(args.output)
    for name, paths in info.items():
        print(f"{name}: {paths['data']} + {paths['schema']}")
    if args.true_optima:
        out = Path(args.output) / "true_optima.json"
        write_true_optima(out)
        print(f"regret references: {out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(storage_dir=args.storage)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boap",
        description="Preference-guided Bayesian optimization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", "-c", required=True, help="YAML experiment config")
    p_run.add_argument("--output", "-o", default=None, help="override output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override master seed")
    p_run.add_argument("--jobs", "-j", type=int, default=1, help="parallel workers")
    p_run.set_defaults(func=_cmd_run)

    p_sum = sub.add_parser("summarize", help="aggregate results into tables")
    p_sum.add_argument("results", help="results directory from `boap run`")
    p_sum.set_defaults(func=_cmd_summarize)

    p_rep = sub.add_parser("report", help="render regret figures")
    p_rep.add_argument("results", help="results directory from `boap run`")
    p_rep.add_argument("--output", "-o", default=None, help="figures directory")
    p_rep.set_defaults(func=_cmd_report)

    p_fix = sub.add_parser("fixtures", help="write bundled dataset fixtures")
    p_fix.add_argument("--output", "-o", default="fixtures", help="target directory")
    p_fix.add_argument(
        "--true-optima",
        action="store_true",
        help="also recompute the brute-force regret references (slow)",
    )
    p_fix.set_defaults(func=_cmd_fixtures)

    p_srv = sub.add_parser("serve", help="start the live session service")
    p_srv.add_argument("--storage", default="sessions", help="session event-log directory")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8787)
    p_srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
