"""
Surrogates on an integer lattice
================================

Fits the cubic RBF and the kriging model to a handful of points of a
two-dimensional lattice, then looks at how each one picks the next point:
the RBF through the weighted distance/prediction score, kriging through
expected improvement maximized by the genetic algorithm.
"""

# %%
# A 21 x 21 lattice and a bowl with its minimum at (14, 6).
import numpy as np

from latticehpo.acquisition import GaConfig, WeightCycle, ga_maximize_ei, generate_candidates, weighted_score_select
from latticehpo.domain import DimensionSpec, build_domain
from latticehpo.gp import expected_improvement, fit_gp, gp_predict
from latticehpo.rbf import fit_rbf, predict_rbf

dom = build_domain([DimensionSpec("x", tuple(range(21))), DimensionSpec("y", tuple(range(21)))])
target = np.array([14, 6])


def bowl(pts):
    return np.sum((np.atleast_2d(pts) - target) ** 2, axis=1).astype(float)


rng = np.random.default_rng(3)
X = np.unique(dom.random_points(rng, 8), axis=0)
y = bowl(X)
print("evaluated points:\n", np.column_stack([X, y]))

# %%
# The RBF interpolates the data exactly; between the data it is a smooth
# blend of cubic bumps plus a plane.
rbf = fit_rbf(X, y)
print("RBF at the data:", np.round(predict_rbf(rbf, X.astype(float)), 10))
print("RBF at the true minimum:", float(predict_rbf(rbf, target.astype(float))))

# %%
# One cycle of weights. omega = 0 trusts the prediction, omega = 1 looks
# only at the distance to what has been evaluated.
best = X[np.argmin(y)]
cycle = WeightCycle()
seen = {tuple(p) for p in X}
for _ in range(5):
    omega = cycle.next()
    cands = generate_candidates(dom, best, seen, 500, rng)
    k, pt = weighted_score_select(cands.points, rbf, X, omega)
    print(f"omega={omega:4.2f} -> next point {tuple(int(c) for c in pt)}, "
          f"prediction {float(predict_rbf(rbf, pt.astype(float))):7.2f}")

# %%
# Kriging: a correlation length per dimension is fitted by maximum
# likelihood; the model also reports its own uncertainty.
gp = fit_gp(X.astype(float), y, rng=rng)
print("gammas", gp.gammas, "mu", round(gp.mu_hat, 3), "sigma^2", round(gp.sigma2_hat, 3))
mean, mse = gp_predict(gp, target.astype(float))
print(f"kriging at the true minimum: mean {float(mean):.2f}, std {float(np.sqrt(mse)):.2f}")

# %%
# Expected improvement over the whole lattice versus what the GA finds.
ei = expected_improvement(gp, dom.enumerate().astype(float), y.min())
res = ga_maximize_ei(dom, gp, y.min(), GaConfig(), np.random.default_rng(0))
print(f"brute-force max EI {ei.max():.4f} at {tuple(int(c) for c in dom.enumerate()[np.argmax(ei)])}")
print(f"GA max EI          {res.value:.4f} at {tuple(int(c) for c in res.point)} ({res.n_evals} evaluations)")
