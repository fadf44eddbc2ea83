"""Experiment configuration files.

A config is a YAML mapping; every key is optional except ``domain`` and
``objective``::

    seed: 7                    # master seed
    output: runs/quadratic     # output directory
    trials: 5
    budget: 50
    n0: null                   # initial design size, default d + 1
    replicates: 5              # N seeded evaluations per point
    strategies: [rbf, gp, random]
    workers: 1                 # threads for the replicates of one point
    acquisition:
      M: 500                   # perturbation (and uniform) candidates
      weights: [0.0, 0.25, 0.5, 0.75, 1.0]
      ga: {generations: 100, population: 100, crossover_prob: 0.75, tournament: 3}
    domain:
      preset: mlp_table        # or reduced_mlp; or give dims instead
      dims:
        - {name: x, values: [0, 1, 2]}
        - {name: y, range: [0, 10, 1]}   # start, stop (inclusive), step
    objective:
      kind: quadratic          # quadratic | noisy-quadratic | multimodal | mlp
      target: [5, 5, 5]        # lattice coordinates; default is the centre
      sigma: 0.0               # noise for noisy-quadratic
      seed: 0                  # bump placement for multimodal
      # kind: mlp only
      series: data.csv         # or a mapping of generator options
      wells: null              # default: every gw_* column
      train_count: 1000
      test_mode: dynamic       # or static
      defaults: {}             # values for hyperparameters not searched
      horizon: 0               # out-of-sample days held back after the run

Errors are raised as :class:`ConfigError` with the dotted path of the
offending field.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .acquisition import DEFAULT_WEIGHTS, GaConfig
from .domain import DimensionSpec, DomainError, IntegerDomain, build_domain, mlp_table_domain
from .driver import STRATEGIES

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "build_config_domain",
           "OBJECTIVE_KINDS"]

OBJECTIVE_KINDS = ("quadratic", "noisy-quadratic", "multimodal", "mlp")
_TOP_KEYS = {"seed", "output", "trials", "budget", "n0", "replicates", "strategies", "workers",
             "acquisition", "domain", "objective"}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ExperimentConfig:
    domain: IntegerDomain
    objective: dict[str, Any]
    strategies: tuple[str, ...] = STRATEGIES
    trials: int = 5
    budget: int = 50
    n0: int | None = None
    replicates: int = 5
    seed: int = 0
    output: str = "runs/experiment"
    workers: int = 1
    M: int = 500
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    ga: GaConfig = field(default_factory=GaConfig)
    raw: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def initial_size(self) -> int:
        return self.domain.d + 1 if self.n0 is None else self.n0

    def with_overrides(self, *, seed=None, output=None, trials=None, budget=None) -> "ExperimentConfig":
        """Apply command-line overrides and re-check the invariants."""
        changes = {k: v for k, v in dict(seed=seed, output=output, trials=trials, budget=budget).items()
                   if v is not None}
        cfg = replace(self, **changes)
        _check_counts(cfg)
        return cfg

    def to_dict(self) -> dict:
        out = dict(self.raw)
        out.update(seed=self.seed, output=self.output, trials=self.trials, budget=self.budget,
                   n0=self.n0, replicates=self.replicates, strategies=list(self.strategies),
                   workers=self.workers)
        return out


def _int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def build_config_domain(spec, path: str = "domain") -> IntegerDomain:
    spec = _mapping(spec, path)
    if "preset" in spec:
        preset = spec["preset"]
        if preset == "mlp_table":
            return mlp_table_domain()
        if preset == "reduced_mlp":
            from .objective import reduced_domain
            return reduced_domain()
        raise ConfigError(f"{path}.preset", f"unknown preset {preset!r}; use mlp_table or reduced_mlp")
    dims = spec.get("dims")
    if not isinstance(dims, list) or not dims:
        raise ConfigError(f"{path}.dims", "expected a non-empty list of dimensions")
    out = []
    for i, d in enumerate(dims):
        p = f"{path}.dims[{i}]"
        d = _mapping(d, p)
        name = d.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigError(f"{p}.name", "expected a non-empty string")
        try:
            if "values" in d:
                vals = d["values"]
                if not isinstance(vals, list):
                    raise ConfigError(f"{p}.values", "expected a list")
                out.append(DimensionSpec(name, tuple(_number(v, f"{p}.values") for v in vals)))
            elif "range" in d:
                r = d["range"]
                if not isinstance(r, list) or len(r) != 3:
                    raise ConfigError(f"{p}.range", "expected [start, stop, step]")
                out.append(DimensionSpec.from_range(name, *(_number(v, f"{p}.range") for v in r)))
            else:
                raise ConfigError(p, "needs 'values' or 'range'")
        except DomainError as exc:
            raise ConfigError(p, str(exc)) from None
    try:
        return build_domain(out)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _check_objective(obj, domain: IntegerDomain) -> dict:
    obj = dict(_mapping(obj, "objective"))
    kind = obj.get("kind")
    if kind not in OBJECTIVE_KINDS:
        raise ConfigError("objective.kind", f"must be one of {list(OBJECTIVE_KINDS)}, got {kind!r}")
    if kind in ("quadratic", "noisy-quadratic") and obj.get("target") is not None:
        t = obj["target"]
        if not isinstance(t, list) or len(t) != domain.d:
            raise ConfigError("objective.target", f"expected a list of {domain.d} lattice coordinates")
        for i, c in enumerate(t):
            _int(c, f"objective.target[{i}]", 0)
        if not bool(domain.contains([t])[0]):
            raise ConfigError("objective.target", f"{t} lies outside the domain")
    if "sigma" in obj:
        if _number(obj["sigma"], "objective.sigma") < 0:
            raise ConfigError("objective.sigma", "must be >= 0")
    if "seed" in obj:
        _int(obj["seed"], "objective.seed")
    if kind == "mlp":
        if "series" not in obj:
            raise ConfigError("objective.series", "required for kind mlp (a path or generator options)")
        if not isinstance(obj["series"], (str, dict)):
            raise ConfigError("objective.series", "expected a file path or a mapping of generator options")
        _int(obj.get("train_count"), "objective.train_count", 1)
        if obj.get("test_mode", "dynamic") not in ("dynamic", "static"):
            raise ConfigError("objective.test_mode", "must be dynamic or static")
        if "horizon" in obj:
            _int(obj["horizon"], "objective.horizon", 0)
        if "wells" in obj and obj["wells"] is not None and not isinstance(obj["wells"], list):
            raise ConfigError("objective.wells", "expected a list of well names")
        _mapping(obj.get("defaults", {}), "objective.defaults")
        from .objective import HYPERPARAMETERS
        bad = [n for n in domain.names if n not in HYPERPARAMETERS]
        if bad:
            raise ConfigError("domain", f"dimensions {bad} are not MLP hyperparameters {list(HYPERPARAMETERS)}")
    return obj


def _check_counts(cfg: ExperimentConfig) -> None:
    _int(cfg.trials, "trials", 1)
    _int(cfg.budget, "budget", 1)
    _int(cfg.replicates, "replicates", 1)
    _int(cfg.seed, "seed", 0)
    if cfg.n0 is not None:
        _int(cfg.n0, "n0", 1)
    if cfg.budget < cfg.initial_size:
        raise ConfigError("budget", f"must be >= n0 ({cfg.initial_size}), got {cfg.budget}")
    if cfg.budget > cfg.domain.cardinality:
        raise ConfigError("budget", f"exceeds the domain size {cfg.domain.cardinality}")


def parse_config(data: dict) -> ExperimentConfig:
    data = _mapping(data, "<root>")
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ConfigError(unknown[0], f"unknown key (allowed: {sorted(_TOP_KEYS)})")
    if "domain" not in data:
        raise ConfigError("domain", "required")
    if "objective" not in data:
        raise ConfigError("objective", "required")
    domain = build_config_domain(data["domain"])
    objective = _check_objective(data["objective"], domain)

    strategies = data.get("strategies", list(STRATEGIES))
    if not isinstance(strategies, list) or not strategies:
        raise ConfigError("strategies", "expected a non-empty list")
    for i, s in enumerate(strategies):
        if s not in STRATEGIES:
            raise ConfigError(f"strategies[{i}]", f"unknown strategy {s!r}; use {list(STRATEGIES)}")
    if len(set(strategies)) != len(strategies):
        raise ConfigError("strategies", "duplicate entries")

    acq = _mapping(data.get("acquisition", {}) or {}, "acquisition")
    M = _int(acq.get("M", 500), "acquisition.M", 1)
    weights = acq.get("weights", list(DEFAULT_WEIGHTS))
    if not isinstance(weights, list) or not weights:
        raise ConfigError("acquisition.weights", "expected a non-empty list")
    weights = tuple(_number(w, f"acquisition.weights[{i}]") for i, w in enumerate(weights))
    if any(not 0.0 <= w <= 1.0 for w in weights):
        raise ConfigError("acquisition.weights", "weights must lie in [0, 1]")
    ga = _mapping(acq.get("ga", {}) or {}, "acquisition.ga")
    ga_cfg = GaConfig(
        generations=_int(ga.get("generations", 100), "acquisition.ga.generations", 1),
        population=_int(ga.get("population", 100), "acquisition.ga.population", 2),
        crossover_prob=_number(ga.get("crossover_prob", 0.75), "acquisition.ga.crossover_prob"),
        tournament=_int(ga.get("tournament", 3), "acquisition.ga.tournament", 1),
    )

    output = data.get("output", "runs/experiment")
    if not isinstance(output, str):
        raise ConfigError("output", "expected a path string")
    cfg = ExperimentConfig(
        domain=domain,
        objective=objective,
        strategies=tuple(strategies),
        trials=data.get("trials", 5),
        budget=data.get("budget", 50),
        n0=data.get("n0"),
        replicates=data.get("replicates", 5),
        seed=data.get("seed", 0),
        output=output,
        workers=_int(data.get("workers", 1), "workers", 1),
        M=M,
        weights=weights,
        ga=ga_cfg,
        raw=dict(data),
    )
    _check_counts(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"invalid YAML in {path}: {exc}") from None
    if data is None:
        raise ConfigError("<root>", "empty config")
    cfg = parse_config(data)
    series = cfg.objective.get("series")
    if isinstance(series, str) and not Path(series).is_absolute():
        # relative data paths are resolved against the config file
        obj = dict(cfg.objective, series=str(path.parent / series))
        cfg = replace(cfg, objective=obj)
    return cfg
