"""Command line entry point: one subcommand per experiment kind.

Exit codes: 0 when every applicable check passes, 1 when any fails,
2 for configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roughdonsker", description="Seeded rough-path Monte Carlo experiments.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENTS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="JSON file with ExperimentConfig fields")
        p.add_argument("--seed", type=int)
        p.add_argument("--replicas", type=int)
        p.add_argument("--out", help="output directory (default results/<kind>)")
        p.add_argument("--threads", type=int)
        p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
        p.add_argument("--quiet", action="store_true", help="only print the verdict line")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    overrides = {k: getattr(args, k) for k in ("seed", "replicas", "threads") if getattr(args, k) is not None}
    out = args.out or os.path.join("results", args.kind)
    overrides["out"] = out
    try:
        if args.config:
            cfg = load_config(args.config, args.kind, overrides)
        else:
            cfg = ExperimentConfig.from_dict(overrides, args.kind)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    paths = report.write(out, figures=not args.no_figures)
    if not args.quiet:
        for c in report.checks:
            if not c["applicable"]:
                status = "SKIP"
            else:
                status = "PASS" if c["passed"] else "FAIL"
            print(f"{status}  {c['name']}  value={c['value']}  tol={c['tolerance']}")
        for w in report.body["warnings"]:
            print(f"warning: {w}")
        print(f"wrote {len(paths)} files to {out}")
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{args.kind}: {verdict} ({report.body['n_failed']} of {report.body['n_checks']} checks failed, "
          f"{report.meta['wall_clock_s']} s)")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
