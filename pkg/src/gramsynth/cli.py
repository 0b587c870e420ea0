"""Command-line experiment runner.

Subcommands: synthesize, scale, underactuated, baseline, reference.
Common flags (--out, --seed, --format, --workers) override the config
file; environment variables prefixed GRAMSYNTH_ (OUT, SEED, FORMAT,
WORKERS) supply defaults for the flags.  Exit code 0 means the run ended
on a successful termination criterion.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .errors import ConfigError, GramsynthError
from .harness import (ExperimentConfig, run_baseline, run_reference,
                      run_scale, run_synthesize, run_underactuated)

_COMMANDS = {
    "synthesize": run_synthesize,
    "scale": run_scale,
    "underactuated": run_underactuated,
    "baseline": run_baseline,
    "reference": run_reference,
}


def _env(name, cast=str):
    raw = os.environ.get(f"GRAMSYNTH_{name}")
    if raw is None:
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"bad GRAMSYNTH_{name}={raw!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gramsynth",
        description="Gramian fixed-point steering synthesis experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="root seed (overrides config)")
        p.add_argument("--format", choices=("csv", "json"),
                       help="telemetry export format")
        p.add_argument("--workers", type=int,
                       help="parallel workers for product solves")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    out = args.out or _env("OUT")
    seed = args.seed if args.seed is not None else _env("SEED", int)
    fmt = args.format or _env("FORMAT")
    workers = args.workers if args.workers is not None else _env("WORKERS", int)
    if out is not None:
        cfg.out_dir = out
    if seed is not None:
        cfg.seed = seed
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        cfg.export_format = fmt
    if workers is not None:
        cfg.synthesis = replace(cfg.synthesis, workers=workers)
    cfg.raw["out_dir"] = cfg.out_dir
    cfg.raw.setdefault("export", {})["format"] = cfg.export_format
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_json(args.config)
        cfg = _apply_overrides(cfg, args)
        artifact = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GramsynthError as exc:
        print(f"run error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    path = artifact.save(cfg.out_dir)
    st = artifact.status
    print(f"{args.command}: {st['criterion']} "
          f"(iterations={st['iterations']}, success={st['success']}) "
          f"-> {path}")
    if st.get("message"):
        print(f"  {st['message']}")
    return 0 if artifact.success else 1


if __name__ == "__main__":
    sys.exit(main())
