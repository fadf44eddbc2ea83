"""Cheap lattice objectives with known optima, for exercising the optimizers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import IntegerDomain

__all__ = [
    "SyntheticObjective",
    "quadratic",
    "multimodal",
    "with_noise",
    "local_minima",
    "brute_force_argmin",
]


@dataclass
class SyntheticObjective:
    """Objective on a lattice, evaluated through raw hyperparameter values.

    ``fn`` maps an ``(m, d)`` array of lattice coordinates to ``m`` values.
    With ``sigma > 0`` each evaluation adds Gaussian noise drawn from a
    generator seeded by ``(seed, flat index of the point)``, so results are
    reproducible per ``(point, seed)``.
    """

    domain: IntegerDomain
    fn: object
    kind: str
    optimum: tuple[int, ...]
    sigma: float = 0.0

    def values(self, points) -> np.ndarray:
        """Noiseless values at lattice points."""
        return np.asarray(self.fn(self.domain.as_points(points)), dtype=float)

    def evaluate_point(self, point, seed: int = 0) -> float:
        v = float(self.values(point)[0])
        if self.sigma > 0:
            flat = int(self.domain.flat_index(point)[0])
            noise_rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, flat])
            v += self.sigma * float(noise_rng.standard_normal())
        return v

    def evaluate(self, raw, seed: int = 0) -> float:
        return self.evaluate_point(self.domain.from_raw(raw), seed)

    @property
    def optimal_value(self) -> float:
        return float(self.values(self.optimum)[0])


def quadratic(domain: IntegerDomain, target) -> SyntheticObjective:
    """``f(x) = sum_i (x_i - target_i)^2``; zero exactly at ``target``."""
    t = domain.check(target)[0]

    def fn(pts):
        return np.sum((pts - t) ** 2, axis=1).astype(float)

    return SyntheticObjective(domain, fn, "quadratic", tuple(int(c) for c in t))


def local_minima(domain: IntegerDomain, values: np.ndarray) -> np.ndarray:
    """Flat indices of points strictly below all their +-1 axis neighbours.

    ``values`` holds the objective on :meth:`IntegerDomain.enumerate` order.
    """
    grid = np.asarray(values, dtype=float).reshape(tuple(domain.sizes))
    is_min = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.ndim):
        if grid.shape[ax] == 1:
            continue
        fwd = np.full(grid.shape, np.inf)
        bwd = np.full(grid.shape, np.inf)
        sl_a = [slice(None)] * grid.ndim
        sl_b = [slice(None)] * grid.ndim
        sl_a[ax], sl_b[ax] = slice(0, -1), slice(1, None)
        fwd[tuple(sl_a)] = grid[tuple(sl_b)]  # neighbour at +1
        bwd[tuple(sl_b)] = grid[tuple(sl_a)]  # neighbour at -1
        is_min &= (grid < fwd) & (grid < bwd)
    return np.flatnonzero(is_min.ravel())


def multimodal(domain: IntegerDomain, seed: int = 0, n_bumps: int = 3,
               width: float = 0.18, max_tries: int = 50) -> SyntheticObjective:
    """Sum of ``n_bumps`` negative Gaussian wells at seeded lattice locations.

    Well widths are ``width`` times the extent of each dimension. The
    construction redraws (deterministically) until the lattice has at least
    two local minima, then stores the enumerated global optimum.
    """
    if domain.cardinality > 10**5:
        raise ValueError("multimodal objectives are enumerated; keep |Omega| <= 1e5")
    rng = np.random.default_rng(seed)
    span = np.maximum(domain.sizes - 1, 1).astype(float)
    all_pts = domain.enumerate()
    for _ in range(max_tries):
        centers = domain.random_points(rng, n_bumps).astype(float)
        depths = rng.uniform(0.5, 1.5, size=n_bumps)
        scales = width * span * rng.uniform(0.7, 1.3, size=(n_bumps, 1))

        def fn(pts, centers=centers, depths=depths, scales=scales):
            z = (pts[:, None, :] - centers[None, :, :]) / scales[None, :, :]
            return -np.sum(depths * np.exp(-0.5 * np.sum(z * z, axis=2)), axis=1)

        vals = fn(all_pts)
        if len(local_minima(domain, vals)) >= 2:
            best = all_pts[int(np.argmin(vals))]
            return SyntheticObjective(domain, fn, "multimodal", tuple(int(c) for c in best))
    raise RuntimeError("could not draw a multimodal instance; domain too small?")


def with_noise(obj: SyntheticObjective, sigma: float) -> SyntheticObjective:
    """Same objective with additive seeded Gaussian noise of scale ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    kind = obj.kind if sigma == 0 else f"noisy-{obj.kind}"
    return SyntheticObjective(obj.domain, obj.fn, kind, obj.optimum, float(sigma))


def brute_force_argmin(obj: SyntheticObjective) -> tuple[tuple[int, ...], float]:
    pts = obj.domain.enumerate()
    vals = obj.values(pts)
    k = int(np.argmin(vals))
    return tuple(int(c) for c in pts[k]), float(vals[k])
