"""The sequential surrogate-assisted search loop.

Each lattice point is scored by averaging ``N`` seeded evaluations of an
expensive, stochastic objective. The loop is::

    initial design (n0 distinct random points)
    repeat until budget:
        fit surrogate on every (point, mean loss) pair
        propose one unevaluated point
        evaluate it N times and record the mean
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence, runtime_checkable

import numpy as np

from .acquisition import (
    GaConfig,
    SearchExhausted,
    WeightCycle,
    ga_maximize_ei,
    generate_candidates,
    random_propose,
    weighted_scores,
)
from .domain import IntegerDomain
from .gp import GpFitError, fit_gp
from .rbf import RbfFitError, fit_rbf, predict_rbf

__all__ = [
    "ExpensiveObjective",
    "EvaluationRecord",
    "OptimizationTrace",
    "ObjectiveFailure",
    "STRATEGIES",
    "run_hpo",
    "summarize_trials",
]

logger = logging.getLogger(__name__)

STRATEGIES = ("rbf", "gp", "random")


@runtime_checkable
class ExpensiveObjective(Protocol):
    """Anything with ``evaluate(raw, seed) -> float``.

    The same ``(raw, seed)`` pair must always give the same loss.
    """

    def evaluate(self, raw: np.ndarray, seed: int) -> float: ...


class ObjectiveFailure(RuntimeError):
    """Every replicate evaluation of a point failed."""


@dataclass
class EvaluationRecord:
    point: tuple[int, ...]
    raw: tuple[float, ...]
    replicate_losses: tuple[float, ...]  # NaN marks a replicate that failed twice
    mean_loss: float
    replicate_seeds: tuple[int, ...]
    wall_time_seconds: float = 0.0

    def to_dict(self, *, with_time: bool = False) -> dict:
        out = {
            "point": list(self.point),
            "raw": list(self.raw),
            "replicate_seeds": list(self.replicate_seeds),
            "replicate_losses": [None if math.isnan(v) else v for v in self.replicate_losses],
            "mean_loss": self.mean_loss,
        }
        if with_time:
            out["wall_time_seconds"] = self.wall_time_seconds
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "EvaluationRecord":
        return cls(
            point=tuple(int(c) for c in obj["point"]),
            raw=tuple(float(v) for v in obj["raw"]),
            replicate_losses=tuple(math.nan if v is None else float(v)
                                   for v in obj["replicate_losses"]),
            mean_loss=float(obj["mean_loss"]),
            replicate_seeds=tuple(int(s) for s in obj["replicate_seeds"]),
            wall_time_seconds=float(obj.get("wall_time_seconds", 0.0)),
        )


@dataclass
class OptimizationTrace:
    strategy: str
    records: list[EvaluationRecord] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.mean_loss for r in self.records], dtype=float)

    @property
    def points(self) -> np.ndarray:
        return np.array([r.point for r in self.records], dtype=np.int64)

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.losses)

    @property
    def cumulative_time(self) -> np.ndarray:
        return np.cumsum([r.wall_time_seconds for r in self.records])

    @property
    def best_index(self) -> int:
        """Earliest record attaining the minimal mean loss."""
        return int(np.argmin(self.losses))

    @property
    def best(self) -> EvaluationRecord:
        return self.records[self.best_index]


def _retry_seed(seed: int) -> int:
    # deterministic, distinct from any seed drawn for the original replicates
    return int((seed * 0x9E3779B97F4A7C15 + 0x632BE59BD9B4E019) % (2**63))


def _evaluate_replicates(objective, raw: np.ndarray, seeds: Sequence[int], workers: int):
    def one(seed):
        try:
            v = float(objective.evaluate(raw.copy(), int(seed)))
            if not math.isfinite(v):
                raise ValueError(f"non-finite loss {v!r}")
            return v, int(seed), None
        except Exception as first:  # noqa: BLE001 - any objective failure triggers the retry
            s2 = _retry_seed(seed)
            try:
                v = float(objective.evaluate(raw.copy(), s2))
                if not math.isfinite(v):
                    raise ValueError(f"non-finite loss {v!r}")
                return v, s2, None
            except Exception as second:  # noqa: BLE001
                return math.nan, int(seed), f"{first!r}; retry: {second!r}"

    t0 = time.perf_counter()
    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    elapsed = time.perf_counter() - t0
    return results, elapsed


def _evaluate_point(objective, domain: IntegerDomain, point, n_replicates: int,
                    rng: np.random.Generator, workers: int) -> EvaluationRecord:
    point = tuple(int(c) for c in point)
    raw = domain.to_raw(point)
    seeds = [int(s) for s in rng.integers(0, 2**31 - 1, size=n_replicates)]
    results, elapsed = _evaluate_replicates(objective, raw, seeds, workers)
    losses = tuple(r[0] for r in results)
    ok = [v for v in losses if not math.isnan(v)]
    if not ok:
        errors = "\n  ".join(r[2] for r in results)
        raise ObjectiveFailure(f"all {n_replicates} replicates failed at raw={raw.tolist()}:\n  {errors}")
    for r in results:
        if r[2] is not None:
            logger.warning("replicate failed at %s (seed %d): %s", raw.tolist(), r[1], r[2])
    return EvaluationRecord(
        point=point,
        raw=tuple(float(v) for v in raw),
        replicate_losses=losses,
        mean_loss=float(np.mean(ok)),
        replicate_seeds=tuple(r[1] for r in results),
        wall_time_seconds=elapsed,
    )


def _propose_rbf(search: IntegerDomain, X: np.ndarray, y: np.ndarray, M: int,
                 omega: float, rng: np.random.Generator) -> np.ndarray:
    best = X[int(np.argmin(y))]
    cands = generate_candidates(search, best, X, M, rng)
    try:
        model = fit_rbf(X, y)
        preds = predict_rbf(model, cands.points.astype(float))
    except RbfFitError as exc:
        # affinely dependent design: fall back to pure distance this round
        logger.info("RBF fit unavailable (%s); using distance-only selection", exc)
        preds, omega = np.zeros(len(cands)), 1.0
    V = weighted_scores(cands.points, preds, X, omega)
    return cands.points[int(np.argmin(V))]


def _propose_gp(search: IntegerDomain, X: np.ndarray, y: np.ndarray, ga: GaConfig,
                rng: np.random.Generator) -> np.ndarray | None:
    try:
        model = fit_gp(X, y, rng=rng)
    except GpFitError as exc:
        logger.info("GP fit failed (%s)", exc)
        return None
    res = ga_maximize_ei(search, model, float(y.min()), ga, rng)
    return res.point


def run_hpo(
    objective: ExpensiveObjective,
    domain: IntegerDomain,
    strategy: str = "rbf",
    budget: int = 50,
    n0: int | None = None,
    n_replicates: int = 5,
    rng: np.random.Generator | int | None = None,
    *,
    M: int = 500,
    ga_config: GaConfig | None = None,
    weights: Sequence[float] | None = None,
    workers: int = 1,
    callback=None,
) -> OptimizationTrace:
    """Run one optimization trial and return its trace.

    :param objective: object with ``evaluate(raw, seed)``.
    :param domain: the lattice to search.
    :param strategy: ``"rbf"``, ``"gp"`` or ``"random"``.
    :param budget: total number of distinct points evaluated.
    :param n0: size of the random initial design; defaults to ``d + 1``.
    :param n_replicates: seeded evaluations averaged per point.
    :param rng: generator or seed; fixes the whole trace.
    :param M: number of perturbation (and of uniform) candidates for RBF.
    :param workers: threads used for the replicates of a single point.
    :param callback: called as ``callback(trace)`` after every evaluation.

    Surrogates are fitted only on dimensions with more than one value, since
    a constant coordinate would make the RBF tail singular. If the GP
    proposal is already evaluated, a uniformly random unevaluated point is
    used instead so that no point is evaluated twice.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    n0 = domain.d + 1 if n0 is None else int(n0)
    if not budget >= n0 >= 1:
        raise ValueError(f"need budget >= n0 >= 1 (budget={budget}, n0={n0})")
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    if domain.cardinality < budget:
        raise ValueError(f"budget {budget} exceeds the domain size {domain.cardinality}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    ga_config = GaConfig() if ga_config is None else ga_config
    cycle = WeightCycle(weights) if weights is not None else WeightCycle()

    trace = OptimizationTrace(
        strategy=strategy,
        config=dict(budget=budget, n0=n0, n_replicates=n_replicates, M=M,
                    weights=list(cycle.weights), dims=domain.names,
                    ga=dict(generations=ga_config.generations, population=ga_config.population,
                            crossover_prob=ga_config.crossover_prob)),
    )
    seen: set[tuple[int, ...]] = set()

    def add(point):
        point = tuple(int(c) for c in point)
        if point in seen:
            raise AssertionError(f"point {point} proposed twice")
        rec = _evaluate_point(objective, domain, point, n_replicates, rng, workers)
        seen.add(point)
        trace.records.append(rec)
        if callback is not None:
            callback(trace)

    # initial design: distinct uniform points
    while len(trace) < n0:
        p = domain.random_point(rng)
        if p not in seen:
            add(p)

    active = domain.sizes > 1
    search = domain.subdomain(active) if active.any() else None

    def embed(q) -> tuple[int, ...]:
        full = np.zeros(domain.d, dtype=np.int64)
        full[active] = q
        return tuple(int(c) for c in full)

    while len(trace) < budget:
        X = trace.points[:, active]
        y = trace.losses
        if strategy == "random":
            p = random_propose(domain, list(seen), rng)
        elif strategy == "rbf":
            try:
                p = embed(_propose_rbf(search, X, y, M, cycle.next(), rng))
            except SearchExhausted:
                p = random_propose(domain, list(seen), rng)
        else:
            q = _propose_gp(search, X, y, ga_config, rng)
            p = embed(q) if q is not None else None
            if p is None or p in seen:
                p = random_propose(domain, list(seen), rng)
        add(p)
    return trace


def summarize_trials(traces) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise mean and population std of best-so-far over trials.

    Accepts :class:`OptimizationTrace` objects or plain best-so-far arrays.
    """
    series = [t.best_so_far if isinstance(t, OptimizationTrace) else np.asarray(t, float)
              for t in traces]
    if not series:
        raise ValueError("no traces to summarize")
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise ValueError(f"traces have different lengths: {sorted(lengths)}")
    A = np.vstack(series)
    return A.mean(axis=0), A.std(axis=0, ddof=0)
