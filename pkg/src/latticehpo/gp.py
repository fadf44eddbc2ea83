"""Ordinary kriging with a squared-exponential correlation and expected improvement.

The process mean ``mu`` and variance ``sigma2`` are profiled out of the
likelihood in closed form, leaving only the per-dimension correlation
decay rates ``gammas`` to be found numerically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dpotrf, dpotrs
from scipy.spatial.distance import cdist
from scipy.special import ndtr
from scipy.stats import qmc

__all__ = [
    "GpModel",
    "GpFitError",
    "correlation",
    "correlation_matrix",
    "concentrated_loglik",
    "fit_gp",
    "gp_predict",
    "expected_improvement",
    "ei_from_moments",
]

logger = logging.getLogger(__name__)

LOG10_GAMMA_BOUNDS = (-3.0, 2.0)
N_STARTS = 8
N_POLISH = 3
NUGGET0 = 1e-10
NUGGET_MAX = 1e-4
EI_SIGMA_CUTOFF = 1e-12
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class GpFitError(RuntimeError):
    """Correlation matrix could not be factorized even with the largest nugget."""


def correlation(a, b, gammas) -> float:
    """``exp(-sum_i gammas[i] * |a_i - b_i|^2)`` for two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    g = np.asarray(gammas, dtype=float)
    if a.shape != b.shape or a.shape != g.shape:
        raise ValueError("a, b and gammas must have equal length")
    if np.any(g <= 0):
        raise ValueError("gammas must be positive")
    return float(np.exp(-np.sum(g * (a - b) ** 2)))


def correlation_matrix(A, B, gammas) -> np.ndarray:
    sg = np.sqrt(np.asarray(gammas, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float)) * sg
    B = np.atleast_2d(np.asarray(B, dtype=float)) * sg
    return np.exp(-cdist(A, B, "sqeuclidean"))


@dataclass(frozen=True)
class GpModel:
    centers: np.ndarray
    values: np.ndarray
    gammas: np.ndarray
    mu_hat: float
    sigma2_hat: float
    chol: np.ndarray  # lower Cholesky factor of R + nugget*I
    nugget: float
    loglik: float
    degenerate: bool
    ri_1: np.ndarray  # R^-1 1
    ri_res: np.ndarray  # R^-1 (values - mu_hat)

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def corr(self) -> np.ndarray:
        """The correlation matrix including the nugget."""
        return self.chol @ self.chol.T

    def solve(self, rhs) -> np.ndarray:
        return scipy.linalg.cho_solve((self.chol, True), rhs)

    @property
    def ones_Rinv_ones(self) -> float:
        return float(self.ri_1.sum())

    def max_mse(self) -> float:
        """The prior-plus-mean-estimation variance bound on the MSE."""
        return self.sigma2_hat * (1.0 + 1.0 / self.ones_Rinv_ones)


def _factorize(R: np.ndarray, nugget: float):
    n = R.shape[0]
    diag = np.arange(n)
    while True:
        A = R.copy()
        A[diag, diag] += nugget
        L, info = dpotrf(A, lower=1, clean=1)
        if info == 0:
            return L, nugget
        if nugget >= NUGGET_MAX:
            raise GpFitError(f"correlation matrix not positive definite with nugget {nugget:g}")
        nugget = min(nugget * 10.0, NUGGET_MAX)


def _profile(L: np.ndarray, y: np.ndarray):
    """Closed-form ``mu``, ``sigma2`` and the concentrated log-likelihood."""
    n = y.shape[0]
    ones = np.ones(n)
    sol, _ = dpotrs(L, np.column_stack([ones, y]), lower=1)
    Ri1, Riy = sol[:, 0], sol[:, 1]
    one_Ri_1 = Ri1.sum()
    mu = float(Riy.sum() / one_Ri_1)
    # (y - mu)^T R^-1 (y - mu) expanded to reuse the two solves
    sigma2 = float((y @ Riy - 2.0 * mu * Riy.sum() + mu * mu * one_Ri_1) / n)
    sigma2 = max(sigma2, 0.0)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    floor = 1e-300
    ll = -0.5 * (n * math.log(max(sigma2, floor)) + logdet)
    return mu, sigma2, ll


def concentrated_loglik(points, values, gammas, nugget: float = NUGGET0) -> float:
    """Profiled log-likelihood (up to constants) at the given ``gammas``."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(values, dtype=float)
    R = correlation_matrix(X, X, gammas)
    try:
        L, _ = _factorize(R, nugget)
    except GpFitError:
        return -math.inf
    return _profile(L, y)[2]


def _batch_negll(diff2: np.ndarray, y: np.ndarray, log_gammas: np.ndarray) -> np.ndarray:
    """Negative concentrated log-likelihood for a batch of ``log10(gamma)`` rows."""
    n, _, d = diff2.shape
    k = log_gammas.shape[0]
    R = np.exp(-(diff2.reshape(n * n, d) @ (10.0 ** log_gammas).T)).T.reshape(k, n, n)
    return _negll_of(R, y)


def _negll_of(R: np.ndarray, y: np.ndarray) -> np.ndarray:
    k, n, _ = R.shape
    idx = np.arange(n)
    Rn = R.copy()
    Rn[:, idx, idx] += NUGGET0
    try:
        L = np.linalg.cholesky(Rn)
    except np.linalg.LinAlgError:
        if k == 1:
            # escalate the nugget for this one matrix
            try:
                Lj, _ = _factorize(R[0], NUGGET0 * 10.0)
                return np.array([-_profile(Lj, y)[2]])
            except GpFitError:
                return np.array([math.inf])
        h = k // 2
        return np.concatenate([_negll_of(R[:h], y), _negll_of(R[h:], y)])
    B = np.broadcast_to(np.column_stack([np.ones(n), y]), (k, n, 2))
    sol = np.linalg.solve(Rn, B)
    one_Ri_1 = sol[:, :, 0].sum(axis=1)
    Riy = sol[:, :, 1]
    mu = Riy.sum(axis=1) / one_Ri_1
    sigma2 = (Riy @ y - 2.0 * mu * Riy.sum(axis=1) + mu * mu * one_Ri_1) / n
    sigma2 = np.maximum(sigma2, 1e-300)
    logdet = 2.0 * np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1)
    return 0.5 * (n * np.log(sigma2) + logdet)


def fit_gp(points, values, *, rng: np.random.Generator | None = None,
           n_starts: int = N_STARTS, max_sweeps: int = 3) -> GpModel:
    """Fit the kriging model by maximizing the concentrated likelihood.

    The search runs in ``log10(gamma)`` over :data:`LOG10_GAMMA_BOUNDS` from
    ``n_starts`` Latin-hypercube starting points. Each start gets one sweep
    of cyclic coordinate descent, where a coordinate step is a nested grid
    search (a bracketing grid over the whole range, then successively finer
    grids around the best node); the best :data:`N_POLISH` starts continue
    with local sweeps until the likelihood stalls. Starts advance together
    so that the likelihood is evaluated in batches. Constant data gives ``sigma2_hat == 0`` and a
    model flagged ``degenerate``.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(values, dtype=float).ravel()
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two points to fit a GP")
    if y.shape[0] != n:
        raise ValueError(f"{n} points but {y.shape[0]} values")
    if not np.all(np.isfinite(y)):
        raise ValueError("values must be finite")
    if np.unique(X, axis=0).shape[0] != n:
        raise ValueError("duplicate sample points")
    rng = np.random.default_rng(0) if rng is None else rng

    lo, hi = LOG10_GAMMA_BOUNDS
    if np.ptp(y) == 0.0:
        return _assemble(X, y, np.ones(d), degenerate=True)

    diff2 = (X[:, None, :] - X[None, :, :]) ** 2
    S = n_starts
    xs = qmc.LatinHypercube(d=d, seed=rng).random(S) * (hi - lo) + lo
    fx = _batch_negll(diff2, y, xs)
    for sweep in range(max_sweeps):
        if sweep == 1:
            # later sweeps only polish the most promising starts
            keep = np.argsort(fx, kind="stable")[:N_POLISH]
            xs, fx = xs[keep], fx[keep]
        S = xs.shape[0]
        rows = np.arange(S)
        f_before = fx.copy()
        for i in range(d):
            if sweep == 0:
                a, b, m, levels = np.full(S, lo), np.full(S, hi), 11, 4
            else:
                a, b = np.maximum(xs[:, i] - 0.5, lo), np.minimum(xs[:, i] + 0.5, hi)
                m, levels = 7, 3
            for _level in range(levels):
                grid = a[:, None] + (b - a)[:, None] * np.linspace(0.0, 1.0, m)[None, :]
                trial = np.repeat(xs, m, axis=0)
                trial[:, i] = grid.ravel()
                f = _batch_negll(diff2, y, trial).reshape(S, m)
                k = np.argmin(f, axis=1)
                fk = f[rows, k]
                better = fk < fx
                xs[better, i] = grid[rows, k][better]
                fx = np.where(better, fk, fx)
                step = (b - a) / (m - 1)
                centre = grid[rows, k]
                a, b, m = np.maximum(centre - step, lo), np.minimum(centre + step, hi), 7
        if np.all(f_before - fx < 1e-9):
            break

    j = int(np.argmin(fx))
    if not math.isfinite(fx[j]):
        raise GpFitError("likelihood is not finite anywhere in the search box")
    return _assemble(X, y, 10.0 ** xs[j])


def _assemble(X, y, gammas, degenerate: bool = False) -> GpModel:
    L, nug = _factorize(correlation_matrix(X, X, gammas), NUGGET0)
    mu, sigma2, ll = _profile(L, y)
    if degenerate:
        mu, sigma2, ll = float(y[0]), 0.0, math.inf
    ri_1 = scipy.linalg.cho_solve((L, True), np.ones(len(y)))
    ri_res = scipy.linalg.cho_solve((L, True), y - mu)
    return GpModel(X.copy(), y.copy(), np.asarray(gammas, float), mu, sigma2, L, nug, ll,
                   degenerate or sigma2 == 0.0, ri_1, ri_res)


def gp_predict(model: GpModel, x):
    """Kriging mean and mean squared error at one point or a batch.

    Returns ``(mean, mse)`` as floats for a single point or arrays for an
    ``(m, d)`` batch. Tiny negative MSE from round-off is clamped to zero.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    Q = np.atleast_2d(arr)
    r = correlation_matrix(Q, model.centers, model.gammas)  # (m, n)
    Ri_r, _ = dpotrs(model.chol, r.T, lower=1)  # (n, m)
    mean = model.mu_hat + r @ model.ri_res
    quad = np.einsum("mn,nm->m", r, Ri_r)
    one_Ri_r = r @ model.ri_1  # symmetric R: 1^T R^-1 r == r^T R^-1 1
    mse = model.sigma2_hat * (1.0 - quad + (1.0 - one_Ri_r) ** 2 / model.ri_1.sum())
    mse = np.maximum(mse, 0.0)
    if single:
        return float(mean[0]), float(mse[0])
    return mean, mse


def ei_from_moments(mean, s, ell_best):
    """Expected improvement below ``ell_best`` for normal ``N(mean, s^2)``."""
    mean = np.asarray(mean, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros(np.broadcast(mean, s).shape)
    ok = s > EI_SIGMA_CUTOFF
    sm = np.broadcast_to(s, out.shape)[ok]
    v = (ell_best - np.broadcast_to(mean, out.shape)[ok]) / sm
    out[ok] = sm * (v * ndtr(v) + _INV_SQRT_2PI * np.exp(-0.5 * v * v))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def expected_improvement(model: GpModel, x, ell_best: float):
    """EI of the kriging predictive distribution at ``x`` (point or batch)."""
    mean, mse = gp_predict(model, x)
    return ei_from_moments(mean, np.sqrt(mse), ell_best)
