"""Command-line front end.

    latticehpo run CONFIG [--seed S] [--out DIR] [--trials K] [--budget B]
    latticehpo validate CONFIG
    latticehpo emit-plots TRACES_DIR [--out DIR]
    latticehpo gen-data [SPEC] [--seed S] [--out FILE]

``gen-data`` reads an optional YAML mapping of hydrograph generator
options (see :class:`latticehpo.hydrograph.HydrographParams`).
Exit status is 0 on success, 2 for invalid input and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

import yaml

from .config import ConfigError, load_config
from .driver import ObjectiveFailure
from .experiment import build_objective, run_experiment
from .hydrograph import HydrographParams, generate_hydrograph
from .results import TraceFileError, emit_plot_data
from .timeseries import SeriesError, save_series

log = logging.getLogger("latticehpo")


def _cmd_run(args) -> int:
    cfg = load_config(args.config).with_overrides(seed=args.seed, output=args.out,
                                                  trials=args.trials, budget=args.budget)

    def progress(strategy, trial, trace):
        print(f"{strategy} trial {trial}: best mean loss {trace.best.mean_loss:.6g} "
              f"at evaluation {trace.best_index + 1}")

    result = run_experiment(cfg, progress=progress)
    print(f"wrote {len(result.files)} files to {result.output}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    build_objective(cfg)  # loads and checks the data for MLP objectives
    print(f"ok: {cfg.domain.d} dimensions, {cfg.domain.cardinality} points, "
          f"strategies {', '.join(cfg.strategies)}, {cfg.trials} trials x budget {cfg.budget}")
    return 0


def _cmd_emit_plots(args) -> int:
    paths = emit_plot_data(args.traces, args.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def _cmd_gen_data(args) -> int:
    opts = {}
    if args.spec is not None:
        opts = yaml.safe_load(Path(args.spec).read_text()) or {}
        if not isinstance(opts, dict):
            raise ConfigError("<root>", "generator spec must be a mapping")
        allowed = {f.name for f in fields(HydrographParams)}
        for key in opts:
            if key not in allowed:
                raise ConfigError(key, f"unknown generator option (allowed: {sorted(allowed)})")
    if "wells" in opts:
        opts["wells"] = tuple(opts["wells"])
    if args.seed is not None:
        opts["seed"] = args.seed
    series = generate_hydrograph(HydrographParams(**opts))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_series(series, out)
    print(f"wrote {len(series)} days to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latticehpo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a multi-trial experiment")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--trials", type=int)
    run.add_argument("--budget", type=int)
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.set_defaults(func=_cmd_validate)

    emit = sub.add_parser("emit-plots", help="write convergence, time and hyperparameter tables")
    emit.add_argument("traces", help="experiment directory or its traces/ subdirectory")
    emit.add_argument("--out", help="output directory (default: <experiment>/plots)")
    emit.set_defaults(func=_cmd_emit_plots)

    gen = sub.add_parser("gen-data", help="write a synthetic hydrograph CSV")
    gen.add_argument("spec", nargs="?", help="YAML mapping of generator options")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", default="hydrograph.csv")
    gen.set_defaults(func=_cmd_gen_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SeriesError, TraceFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ObjectiveFailure, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
