"""Command line interface.

Three subcommands:

* ``segeval run --config FILE``: evaluate a cohort and write reports.
* ``segeval validate --config FILE``: check config and manifest only.
* ``segeval selftest``: run the built-in oracle suites.

Exit codes: 0 success, 1 configuration or manifest error, 2 when no
case produced a result. A selftest failure also exits 2: the tool could
not vouch for a single result.

The ``SEGEVAL_WORKERS`` environment variable overrides the configured
worker count, so schedulers can re-pin parallelism without editing the
config file.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .batch import EXIT_CONFIG, EXIT_NO_RESULTS, EXIT_OK, run, validate
from .config import load_config
from .errors import SegevalError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segeval",
        description="Batch evaluation of 3D binary segmentations against references.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate a cohort and write reports")
    p_run.add_argument("--config", required=True, help="path to the run config file")

    p_val = sub.add_parser("validate", help="check config and manifest without running")
    p_val.add_argument("--config", required=True, help="path to the run config file")

    p_self = sub.add_parser("selftest", help="run the built-in oracle suites")
    p_self.add_argument(
        "--suites",
        default="confusion,surface,components",
        help="comma-separated suite selection (empty string = no-op pass)",
    )
    p_self.add_argument(
        "--surface-pairs", type=int, default=200, help="random mask pairs (default 200)"
    )
    p_self.add_argument(
        "--component-samples",
        type=int,
        default=2000,
        help="random component masks (default 2000)",
    )
    return parser


def _workers_override() -> Optional[int]:
    raw = os.environ.get("SEGEVAL_WORKERS")
    if raw is None or raw == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise SegevalError(f"SEGEVAL_WORKERS must be an integer, got {raw!r}") from None
    if value < 1:
        raise SegevalError(f"SEGEVAL_WORKERS must be at least 1, got {value}")
    return value


def _cmd_run(config_path: str) -> int:
    from dataclasses import replace

    config = load_config(config_path)
    override = _workers_override()
    if override is not None:
        config = replace(config, workers=override)
    outcome = run(config)
    if outcome.exit_code == EXIT_NO_RESULTS:
        print(
            f"no case could be evaluated ({outcome.n_cases_failed} failed); "
            f"see {outcome.output_dir / 'errors.csv'}",
            file=sys.stderr,
        )
        return EXIT_NO_RESULTS
    print(
        f"evaluated {outcome.n_cases_ok} cases ({outcome.n_rows} rows, "
        f"{outcome.n_cases_failed} failed) "
        f"best threshold {outcome.best_threshold if outcome.best_threshold is not None else 'n/a'}; "
        f"reports in {outcome.output_dir}"
    )
    return EXIT_OK


def _cmd_validate(config_path: str) -> int:
    config = load_config(config_path)
    problems = validate(config)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        print(f"validation failed with {len(problems)} problem(s)", file=sys.stderr)
        return EXIT_CONFIG
    print("config and manifest are consistent")
    return EXIT_OK


def _cmd_selftest(suites: str, surface_pairs: int, component_samples: int) -> int:
    from .oracles import run_selftest

    selection = tuple(s for s in suites.replace(",", " ").split() if s)
    try:
        results = run_selftest(
            suites=selection,
            surface_pairs=surface_pairs,
            component_samples=component_samples,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    all_pass = True
    for suite in results:
        print(suite.describe())
        all_pass = all_pass and suite.passed
    if not all_pass:
        print("selftest FAILED", file=sys.stderr)
        return EXIT_NO_RESULTS
    print("selftest passed" if results else "selftest passed (no suites selected)")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args.config)
        if args.command == "validate":
            return _cmd_validate(args.config)
        if args.command == "selftest":
            return _cmd_selftest(args.suites, args.surface_pairs, args.component_samples)
    except SegevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
