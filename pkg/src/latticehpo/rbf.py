"""Cubic radial basis function interpolation with a linear polynomial tail."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

__all__ = ["RbfModel", "RbfFitError", "NonInvertibleDesignError", "fit_rbf", "predict_rbf"]

#: Condition-number estimate above which the Phi block is regularized.
COND_LIMIT = 1e12


class RbfFitError(ValueError):
    """The interpolation system could not be set up or solved."""


class NonInvertibleDesignError(RbfFitError):
    """The sample points do not span an affine basis (rank(P) < d + 1)."""


@dataclass(frozen=True)
class RbfModel:
    """Fitted interpolant ``s(x) = sum_j lambdas[j] |x - c_j|^3 + beta0 + beta @ x``.

    ``regularized`` is set when the solve needed a diagonal shift on the
    kernel block; in that case interpolation is only approximate.
    """

    centers: np.ndarray
    lambdas: np.ndarray
    beta: np.ndarray
    beta0: float
    values: np.ndarray
    regularized: bool = False

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    def tail_matrix(self) -> np.ndarray:
        return np.hstack([self.centers, np.ones((self.n, 1))])

    def orthogonality_residual(self) -> float:
        """``max |P^T lambda|``; zero for an exact solution."""
        return float(np.max(np.abs(self.tail_matrix().T @ self.lambdas)))

    def __call__(self, x) -> np.ndarray:
        return predict_rbf(self, x)


def _phi(r):
    return r**3


def fit_rbf(points, values) -> RbfModel:
    """Solve the saddle-point system for the cubic interpolant.

    :param points: ``(n, d)`` sample locations, pairwise distinct.
    :param values: length-``n`` observed values (replicate-mean losses).
    :raises NonInvertibleDesignError: if the points are affinely dependent.
    :raises RbfFitError: on duplicate points, size mismatch, or a failed solve.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(values, dtype=float).ravel()
    n, d = X.shape
    if f.shape[0] != n:
        raise RbfFitError(f"{n} points but {f.shape[0]} values")
    if n < d + 1:
        raise NonInvertibleDesignError(f"need at least d+1={d + 1} points, got {n}")
    if not np.all(np.isfinite(f)):
        raise RbfFitError("values must be finite")
    if np.unique(X, axis=0).shape[0] != n:
        raise RbfFitError("duplicate sample points")

    P = np.hstack([X, np.ones((n, 1))])
    if np.linalg.matrix_rank(P) < d + 1:
        raise NonInvertibleDesignError(
            "sample points are affinely dependent (rank(P) < d+1); the RBF system is singular"
        )

    Phi = _phi(cdist(X, X))
    A = np.zeros((n + d + 1, n + d + 1))
    A[:n, :n] = Phi
    A[:n, n:] = P
    A[n:, :n] = P.T
    rhs = np.concatenate([f, np.zeros(d + 1)])

    regularized = False
    if np.linalg.cond(A) > COND_LIMIT:
        # tiny shift on the kernel block only; P stays exact so P^T lambda = 0 still holds.
        # phi(0) = 0 leaves the diagonal empty, so the shift is scaled by the largest entry.
        A[:n, :n] += np.eye(n) * (1e-10 * Phi.max())
        regularized = True
    try:
        sol = scipy.linalg.solve(A, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise RbfFitError(f"linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise RbfFitError("linear solve produced non-finite coefficients")

    lam = sol[:n]
    beta = sol[n : n + d]
    beta0 = float(sol[n + d])
    return RbfModel(
        centers=X.copy(), lambdas=lam, beta=beta, beta0=beta0, values=f.copy(),
        regularized=regularized,
    )


def predict_rbf(model: RbfModel, x) -> np.ndarray | float:
    """Evaluate the interpolant at one point (returns float) or many (array)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    Q = np.atleast_2d(arr)
    if Q.shape[1] != model.d:
        raise ValueError(f"query dimension {Q.shape[1]} != model dimension {model.d}")
    out = _phi(cdist(Q, model.centers)) @ model.lambdas + Q @ model.beta + model.beta0
    return float(out[0]) if single else out
