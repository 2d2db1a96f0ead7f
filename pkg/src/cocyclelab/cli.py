"""Command-line entry point.

    cocyclelab <subcommand> --config <path> --out <dir> [--threads n] [--seed s]

Subcommands: le, ldt, continuity-cocycle, continuity-frequency, ids,
thouless, schedule, ap-check.  Exit codes: 0 success, 1 precondition
refusal, 2 usage error, 3 budget ceiling.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import BudgetError, PreconditionError
from .experiments import EXPERIMENT_KINDS, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cocyclelab", description=__doc__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--out", required=True, help="output directory for CSV and manifest")
        p.add_argument("--threads", type=int, default=1, help="worker hint (results do not depend on it)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cocyclelab: cannot read config: {exc}", file=sys.stderr)
        return 2
    if cfg.get("kind", args.kind) != args.kind:
        print(
            f"cocyclelab: config kind {cfg.get('kind')!r} does not match subcommand {args.kind!r}",
            file=sys.stderr,
        )
        return 2
    try:
        run_experiment(args.kind, cfg, Path(args.out), seed=args.seed, threads=args.threads)
    except BudgetError as exc:
        print(f"cocyclelab: budget ceiling: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"cocyclelab: refused: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"cocyclelab: bad config: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
