"""Multi-trial experiments: every strategy, every trial, files on disk.

Trial seeds come from the master seed by
``np.random.SeedSequence([master, trial, strategy_index])`` where
``strategy_index`` is the position of the strategy in ``("rbf", "gp",
"random")``, so adding or removing strategies never changes another
strategy's trials.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .config import ExperimentConfig
from .driver import STRATEGIES, OptimizationTrace, run_hpo
from .objective import HpoProblemSpec, MlpObjective, make_objective, out_of_sample_run
from .results import (
    trace_name,
    write_best_hyperparameters,
    write_summary,
    write_table,
    write_timing,
    write_trace,
)
from .testbed import multimodal, quadratic, with_noise
from .timeseries import DailySeries

__all__ = ["ExperimentResult", "build_objective", "trial_seed", "run_experiment"]

log = logging.getLogger(__name__)


def trial_seed(master: int, trial: int, strategy: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), int(trial), STRATEGIES.index(strategy)])


def build_objective(cfg: ExperimentConfig):
    """Objective for the search plus, for MLP runs, the full series for the held-back forecast."""
    obj = cfg.objective
    kind = obj["kind"]
    dom = cfg.domain
    if kind in ("quadratic", "noisy-quadratic"):
        target = obj.get("target") or [int(s) // 2 for s in dom.sizes]
        base = quadratic(dom, tuple(target))
        return (with_noise(base, float(obj.get("sigma", 0.0))) if kind == "noisy-quadratic" else base), None
    if kind == "multimodal":
        return multimodal(dom, seed=int(obj.get("seed", 0))), None
    spec = HpoProblemSpec(
        series=obj["series"],
        domain=dom,
        train_count=int(obj["train_count"]),
        wells=obj.get("wells"),
        replicates=cfg.replicates,
        defaults=obj.get("defaults", {}) or {},
        test_mode=obj.get("test_mode", "dynamic"),
    )
    horizon = int(obj.get("horizon", 0))
    full = spec.load()
    if horizon > 0:
        if horizon >= len(full):
            raise ValueError(f"horizon {horizon} is not shorter than the series ({len(full)} days)")
        spec.series = full.slice(0, len(full) - horizon)
    else:
        spec.series = full
    return make_objective(spec), full


@dataclass
class ExperimentResult:
    output: Path
    traces: dict[str, list[OptimizationTrace]] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)


def run_experiment(cfg: ExperimentConfig, *, progress=None) -> ExperimentResult:
    """Run every trial of every strategy and write traces and summaries.

    ``progress`` (optional) is called as ``progress(strategy, trial, trace)``
    after each finished trial.
    """
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    objective, full_series = build_objective(cfg)
    result = ExperimentResult(out)
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
    result.files.append(cfg_path)
    best_entries = []
    for strategy in cfg.strategies:
        traces = []
        for trial in range(cfg.trials):
            ss = trial_seed(cfg.seed, trial, strategy)
            log.info("running %s trial %d", strategy, trial)
            trace = run_hpo(objective, cfg.domain, strategy, budget=cfg.budget, n0=cfg.n0,
                            n_replicates=cfg.replicates, rng=np.random.default_rng(ss), M=cfg.M,
                            ga_config=cfg.ga, weights=cfg.weights, workers=cfg.workers)
            name = trace_name(strategy, trial)
            tpath = out / "traces" / f"{name}.jsonl"
            write_trace(tpath, trace, trial=trial, seed_entropy=[cfg.seed, trial, STRATEGIES.index(strategy)])
            timing = out / "timing" / f"{name}.csv"
            write_timing(timing, trace)
            result.files += [tpath, timing]
            traces.append(trace)
            best_entries.append((strategy, trial, trace))
            if progress is not None:
                progress(strategy, trial, trace)
        spath = out / f"summary_{strategy}.csv"
        write_summary(spath, traces)
        result.files.append(spath)
        result.traces[strategy] = traces
    bpath = out / "best_hyperparameters.csv"
    write_best_hyperparameters(bpath, cfg.domain.names, best_entries)
    result.files.append(bpath)
    horizon = int(cfg.objective.get("horizon", 0) or 0)
    if isinstance(objective, MlpObjective) and horizon > 0:
        result.files += _write_out_of_sample(out, cfg, objective, full_series, result.traces, horizon)
    return result


def _write_out_of_sample(out: Path, cfg: ExperimentConfig, objective: MlpObjective,
                         full: DailySeries, traces, horizon: int) -> list[Path]:
    rows, files = [], []
    wells = list(objective.wells)
    for strategy, ts in traces.items():
        best_trace = min(ts, key=lambda t: t.best.mean_loss)
        best = best_trace.best
        res = out_of_sample_run(objective, best.raw, horizon, seed=best.replicate_seeds[0], series=full)
        rows.append([strategy, *map(float, best.raw), res.mse, res.persistence_mse, *res.rmse_levels])
        fpath = out / f"forecast_{strategy}.csv"
        fc_rows = []
        for k, date in enumerate(res.dates):
            fc_rows.append([str(date), *map(float, res.forecast[k]), *map(float, res.truth[k])])
        write_table(fpath, ["date", *[f"forecast_{w}" for w in wells], *[f"truth_{w}" for w in wells]], fc_rows)
        files.append(fpath)
    opath = out / "out_of_sample.csv"
    write_table(opath, ["strategy", *cfg.domain.names, "mse", "persistence_mse",
                        *[f"rmse_{w}" for w in wells]], rows)
    return [opath, *files]
