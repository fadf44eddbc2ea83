"""
Three strategies on a known optimum
===================================

A quadratic bowl on an 11 x 11 x 11 lattice has its minimum at a known
point, so the search strategies can be compared on how often and how fast
they reach it. Each seed gives every strategy the same target and the
same random stream.
"""

# %%
import numpy as np

from latticehpo.domain import DimensionSpec, build_domain
from latticehpo.driver import run_hpo, summarize_trials
from latticehpo.testbed import quadratic

dom = build_domain([DimensionSpec(f"x{i}", tuple(range(11))) for i in range(3)])
seeds = range(10)
traces = {"rbf": [], "gp": [], "random": []}

for seed in seeds:
    obj = quadratic(dom, tuple(np.random.default_rng(1000 + seed).integers(0, 11, size=3)))
    for strategy, store in traces.items():
        tr = run_hpo(obj, dom, strategy, budget=50, n0=4, n_replicates=1, rng=np.random.default_rng(seed))
        store.append(tr)
    print(f"seed {seed}: " + ", ".join(f"{s} best {ts[-1].best.mean_loss:g}" for s, ts in traces.items()))

# %%
# Mean best-so-far after 10, 20, 30, 40 and 50 evaluations.
print("\neval   " + "".join(f"{s:>10}" for s in traces))
curves = {s: summarize_trials(ts)[0] for s, ts in traces.items()}
for k in (10, 20, 30, 40, 50):
    print(f"{k:4d}   " + "".join(f"{curves[s][k - 1]:10.2f}" for s in traces))

# %%
# How many runs hit the optimum, and when.
for s, ts in traces.items():
    hit = [t.best_index + 1 for t in ts if t.best.mean_loss == 0.0]
    print(f"{s:>6}: optimum found in {len(hit)}/{len(ts)} runs"
          + (f", median at evaluation {int(np.median(hit))}" if hit else ""))
