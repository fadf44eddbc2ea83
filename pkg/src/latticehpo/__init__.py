"""Surrogate-based hyperparameter optimization over integer lattices.

The search side (``domain``, ``rbf``, ``gp``, ``acquisition``, ``driver``)
works with any objective exposing ``evaluate(raw, seed)``. The ``timeseries``,
``mlp`` and ``objective`` modules supply one such objective: the test error
of a small MLP forecasting groundwater levels.
"""

from .domain import DimensionSpec, IntegerDomain, build_domain, mlp_table_domain
from .driver import EvaluationRecord, OptimizationTrace, run_hpo, summarize_trials
from .gp import expected_improvement, fit_gp, gp_predict
from .rbf import fit_rbf, predict_rbf

__version__ = "0.1.0"

__all__ = [
    "DimensionSpec",
    "IntegerDomain",
    "build_domain",
    "mlp_table_domain",
    "EvaluationRecord",
    "OptimizationTrace",
    "run_hpo",
    "summarize_trials",
    "fit_gp",
    "gp_predict",
    "expected_improvement",
    "fit_rbf",
    "predict_rbf",
]
