"""Strategies for choosing the next lattice point to evaluate.

* RBF: perturbation + uniform candidates scored by a blend of distance to
  the evaluated set and surrogate prediction (:func:`weighted_score_select`).
* GP: expected improvement maximized over the lattice by a small genetic
  algorithm (:func:`ga_maximize_ei`).
* Random: uniform over the not-yet-evaluated points (:func:`random_propose`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .domain import IntegerDomain
from .gp import GpModel, expected_improvement
from .rbf import RbfModel, predict_rbf

__all__ = [
    "SearchExhausted",
    "CandidateSet",
    "WeightCycle",
    "GaConfig",
    "GaResult",
    "generate_candidates",
    "weighted_scores",
    "weighted_score_select",
    "ga_maximize",
    "ga_maximize_ei",
    "random_propose",
]

PERTURBATION_STEPS = np.array([-2, -1, 1, 2])
DEFAULT_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)


class SearchExhausted(RuntimeError):
    """Every point of the lattice that could be proposed has been evaluated."""


def _evaluated_flat(domain: IntegerDomain, evaluated) -> np.ndarray:
    if evaluated is None or len(evaluated) == 0:
        return np.empty(0, dtype=np.int64)
    return np.unique(domain.flat_index(np.asarray(list(evaluated))))


@dataclass(frozen=True)
class CandidateSet:
    points: np.ndarray  # (m, d) int
    perturbed: np.ndarray  # (m,) bool; False means a global (uniform) candidate

    def __len__(self) -> int:
        return self.points.shape[0]


class WeightCycle:
    """Endless cycle 0, 0.25, 0.5, 0.75, 1, 0, ... of distance-score weights."""

    def __init__(self, weights=DEFAULT_WEIGHTS):
        self.weights = tuple(float(w) for w in weights)
        if not self.weights or any(not 0.0 <= w <= 1.0 for w in self.weights):
            raise ValueError("weights must be a non-empty sequence in [0, 1]")
        self.cursor = 0

    def next(self) -> float:
        w = self.weights[self.cursor]
        self.cursor = (self.cursor + 1) % len(self.weights)
        return w

    __next__ = next

    def __iter__(self):
        return self


def generate_candidates(domain: IntegerDomain, best, evaluated, M: int,
                        rng: np.random.Generator) -> CandidateSet:
    """``M`` perturbations of ``best`` plus ``M`` uniform points, minus evaluated ones.

    Every coordinate of ``best`` is shifted by a step drawn uniformly from
    {-2, -1, +1, +2} and reflected back into the lattice. Candidates that
    coincide with an evaluated point (or with ``best`` itself) are dropped;
    duplicates among the remaining candidates are kept.

    :raises SearchExhausted: if nothing is left after filtering.
    """
    if M < 1:
        raise ValueError("M must be positive")
    best = domain.check(best)[0]
    steps = rng.choice(PERTURBATION_STEPS, size=(M, domain.d))
    local = domain.reflect_into_bounds(best + steps)
    glob = domain.random_points(rng, M)
    pts = np.vstack([local, glob])
    perturbed = np.r_[np.ones(M, bool), np.zeros(M, bool)]

    flat = domain.flat_index(pts)
    drop = np.isin(flat, _evaluated_flat(domain, evaluated))
    drop[:M] |= flat[:M] == domain.flat_index(best)[0]
    keep = ~drop
    if not np.any(keep):
        raise SearchExhausted("no unevaluated candidate points could be generated")
    return CandidateSet(pts[keep], perturbed[keep])


def weighted_scores(candidates, predictions, evaluated_points, omega: float) -> np.ndarray:
    """Blend of scaled distance and scaled prediction scores; lower is better.

    ``V = omega * V_dist + (1 - omega) * V_pred`` where ``V_dist`` is 0 for
    the candidate farthest from the evaluated set and 1 for the closest, and
    ``V_pred`` is 0 for the lowest prediction and 1 for the highest. A score
    whose spread is zero contributes the same value (1) to every candidate.
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    C = np.atleast_2d(np.asarray(candidates, dtype=float))
    s = np.asarray(predictions, dtype=float).ravel()
    dist = cdist(C, np.atleast_2d(np.asarray(evaluated_points, dtype=float))).min(axis=1)

    dmax, dmin = dist.max(), dist.min()
    v_dist = (dmax - dist) / (dmax - dmin) if dmax > dmin else np.ones_like(dist)
    smax, smin = s.max(), s.min()
    v_pred = (s - smin) / (smax - smin) if smax > smin else np.ones_like(s)
    return omega * v_dist + (1.0 - omega) * v_pred


def weighted_score_select(candidates, rbf: RbfModel, evaluated_points, omega: float):
    """Return ``(index, point)`` of the candidate with the lowest weighted score.

    Ties go to the earliest candidate.
    """
    C = np.atleast_2d(np.asarray(candidates))
    if C.shape[0] == 0:
        raise ValueError("no candidates to select from")
    V = weighted_scores(C, predict_rbf(rbf, C.astype(float)), evaluated_points, omega)
    k = int(np.argmin(V))
    return k, C[k]


@dataclass(frozen=True)
class GaConfig:
    generations: int = 100
    population: int = 100
    crossover_prob: float = 0.75
    mutation_prob: float | None = None  # per gene; None means 1/d
    tournament: int = 3

    def __post_init__(self):
        if self.generations < 0 or self.population < 2 or self.tournament < 1:
            raise ValueError("GA needs generations >= 0, population >= 2, tournament >= 1")
        for p in (self.crossover_prob, self.mutation_prob):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


@dataclass
class GaResult:
    point: np.ndarray
    value: float
    n_evals: int
    history: list = field(default_factory=list)  # best fitness after each generation


def ga_maximize(domain: IntegerDomain, fitness: Callable[[np.ndarray], np.ndarray],
                config: GaConfig, rng: np.random.Generator) -> GaResult:
    """Generational GA maximizing a batched ``fitness`` over the lattice.

    Tournament selection, uniform crossover applied to each parent pair with
    probability ``crossover_prob``, per-gene uniform resampling mutation and
    an elite of one carried over unevaluated. Returns the best individual
    seen in any generation.
    """
    P, d = config.population, domain.d
    pm = 1.0 / d if config.mutation_prob is None else config.mutation_prob
    hi = domain.sizes

    pop = domain.random_points(rng, P)
    fit = np.asarray(fitness(pop), dtype=float)
    n_evals = P
    k = int(np.argmax(fit))
    best_x, best_f = pop[k].copy(), float(fit[k])
    history = [best_f]

    for _ in range(config.generations):
        elite_i = int(np.argmax(fit))
        elite_x, elite_f = pop[elite_i].copy(), fit[elite_i]

        # tournament selection of P parents
        entrants = rng.integers(0, P, size=(P, config.tournament))
        winners = entrants[np.arange(P), np.argmax(fit[entrants], axis=1)]
        parents = pop[winners]

        # uniform crossover on consecutive pairs
        children = parents.copy()
        n_pairs = P // 2
        a, b = parents[0 : 2 * n_pairs : 2], parents[1 : 2 * n_pairs : 2]
        do_cx = rng.random(n_pairs) < config.crossover_prob
        swap = (rng.random((n_pairs, d)) < 0.5) & do_cx[:, None]
        children[0 : 2 * n_pairs : 2] = np.where(swap, b, a)
        children[1 : 2 * n_pairs : 2] = np.where(swap, a, b)

        # per-gene mutation: resample uniformly in range
        mut = rng.random((P, d)) < pm
        fresh = rng.integers(0, hi, size=(P, d))
        children = np.where(mut, fresh, children)

        child_fit = np.asarray(fitness(children[1:]), dtype=float)
        n_evals += P - 1
        pop = np.vstack([elite_x[None, :], children[1:]])
        fit = np.r_[elite_f, child_fit]

        k = int(np.argmax(fit))
        if fit[k] > best_f:
            best_x, best_f = pop[k].copy(), float(fit[k])
        history.append(best_f)

    return GaResult(best_x, best_f, n_evals, history)


def ga_maximize_ei(domain: IntegerDomain, gp: GpModel, ell_best: float,
                   config: GaConfig | None = None,
                   rng: np.random.Generator | None = None) -> GaResult:
    """Maximize the kriging expected improvement over the lattice with a GA.

    ``gp`` must have been fitted in the coordinates of ``domain``. The
    returned point is always inside the lattice; with a degenerate model
    (all EI zero) it is simply some feasible point.
    """
    config = GaConfig() if config is None else config
    rng = np.random.default_rng() if rng is None else rng

    def fitness(pts):
        return expected_improvement(gp, pts.astype(float), ell_best)

    return ga_maximize(domain, fitness, config, rng)


def random_propose(domain: IntegerDomain, evaluated, rng: np.random.Generator,
                   max_rejections: int = 1000) -> tuple[int, ...]:
    """Uniform draw from the lattice points not yet evaluated.

    Rejection sampling; after ``max_rejections`` collisions the remaining
    points are enumerated and one is drawn directly (same distribution).
    """
    taken = _evaluated_flat(domain, evaluated)
    if taken.size >= domain.cardinality:
        raise SearchExhausted("every lattice point has been evaluated")
    taken_set = set(taken.tolist())
    for _ in range(max_rejections):
        p = domain.random_point(rng)
        if int(domain.flat_index(p)[0]) not in taken_set:
            return p
    free = np.setdiff1d(np.arange(domain.cardinality), taken)
    pick = free[rng.integers(0, free.size)]
    return tuple(int(c) for c in domain.unflat_index(pick)[0])
