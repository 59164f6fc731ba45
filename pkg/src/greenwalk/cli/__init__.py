"""Command-line runner: ``greenwalk run | list | show-defaults``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .config import ConfigError, ScenarioConfig, defaults_document, list_scenarios, load_config
from .runner import EXIT_PARSE, RunResult, run_scenario, write_outputs

__all__ = ["ConfigError", "RunResult", "ScenarioConfig", "load_config", "main", "run_scenario"]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greenwalk", description="Green metrics, entropy and escape rates of random walks.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config file or a bundled scenario name")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", type=Path, help="output directory (default: ./greenwalk-out/<scenario>)")
    run.add_argument("--threads", type=int, default=1, help="worker threads for estimators")
    run.add_argument("--budget-atoms", type=int, help="support budget for convolution powers")
    run.add_argument("--budget-steps", type=int, help="per-trajectory step budget")
    lst = sub.add_parser("list", help="list bundled scenarios")
    lst.add_argument("filter", nargs="?", default="")
    sub.add_parser("show-defaults", help="print every configurable default as YAML")
    return p


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        cfg.seed = args.seed
    for flag, key in ((args.budget_atoms, "atoms"), (args.budget_steps, "steps")):
        if flag is not None:
            if flag < 1:
                raise ConfigError(f"budget {key!r} must be a positive integer")
            cfg.budgets[key] = flag
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else 0
    if args.command == "list":
        for name, desc in list_scenarios(args.filter):
            print(f"{name:<24} {desc}")
        return 0
    if args.command == "show-defaults":
        sys.stdout.write(yaml.safe_dump(defaults_document(), sort_keys=False))
        return 0
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    res = run_scenario(cfg, threads=args.threads)
    out = args.out or Path(cfg.output or Path("greenwalk-out") / cfg.name)
    write_outputs(res, Path(out))
    sys.stdout.write((Path(out) / "summary.txt").read_text(encoding="utf-8"))
    return res.exit_code


def entry() -> None:
    sys.exit(main())
