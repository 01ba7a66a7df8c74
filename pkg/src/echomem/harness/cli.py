"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 comparison failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import tomli

from .config import ConfigError, SCENARIO_SECTIONS, default_config_text, validate_config
from .runner import RunReport, compare_to_reference, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_COMPARE = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="echomem", description="Photon-echo memory scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario")
    run.add_argument("scenario")
    run.add_argument("--config", type=Path, help="TOML file layered over the scenario defaults")
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--seed", type=int)
    val = sub.add_parser("validate", help="check a configuration file")
    val.add_argument("--config", type=Path, required=True)
    cmp_ = sub.add_parser("compare", help="compare a report with reference metrics")
    cmp_.add_argument("--report", type=Path, required=True)
    cmp_.add_argument("--reference", type=Path, required=True)
    lst = sub.add_parser("list-scenarios", help="list built-in scenarios")
    lst.add_argument("--show-defaults", action="store_true")
    return ap


def _cmd_run(args) -> int:
    if args.config is not None:
        text = args.config.read_text()
        try:
            name = tomli.loads(text).get("scenario")
        except tomli.TOMLDecodeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if name is not None and name != args.scenario:
            print(f"error: config is for scenario {name!r}, not {args.scenario!r}", file=sys.stderr)
            return EXIT_CONFIG
        if name is None:
            text = f'scenario = "{args.scenario}"\n' + text
    else:
        text = f'scenario = "{args.scenario}"\n'
    try:
        cfg = validate_config(text, seed=args.seed)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_scenario(cfg, args.out)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps({"scenario": report.scenario, "seed": report.seed, "metrics": report.metrics},
                     indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = validate_config(args.config.read_text())
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(cfg.canonical(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        report = RunReport.load(args.report)
        reference = json.loads(args.reference.read_text())
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    result = compare_to_reference(report, reference)
    print(result.summary())
    return EXIT_OK if result.passed else EXIT_COMPARE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "compare":
        return _cmd_compare(args)
    for name in SCENARIO_SECTIONS:
        print(name)
        if args.show_defaults:
            print(default_config_text(name))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
