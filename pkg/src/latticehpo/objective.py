"""The expensive objective: hyperparameters in, test-period MSE of a trained MLP out.

Recognised hyperparameter names are ``epochs``, ``dropout``, ``batch``,
``layers``, ``lag`` and ``nodes``. Dimensions missing from the search
domain take their value from ``HpoProblemSpec.defaults``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .domain import DimensionSpec, IntegerDomain, build_domain
from .hydrograph import HydrographParams, generate_hydrograph
from .mlp import (
    MlpArchitecture,
    MlpModel,
    TrainConfig,
    build_mlp,
    dynamic_forecast,
    evaluate_loss,
    mse,
    train,
)
from .timeseries import (
    GW_PREFIX,
    DailySeries,
    LagSampleSet,
    build_lag_samples,
    fit_scaling,
    load_series,
)

__all__ = [
    "HYPERPARAMETERS",
    "DEFAULT_HYPERPARAMETERS",
    "HpoProblemSpec",
    "MlpObjective",
    "OutOfSampleResult",
    "make_objective",
    "out_of_sample_run",
    "persistence_mse",
    "reduced_domain",
]

HYPERPARAMETERS = ("epochs", "dropout", "batch", "layers", "lag", "nodes")
DEFAULT_HYPERPARAMETERS = {"epochs": 100, "dropout": 0.0, "batch": 50, "layers": 1, "lag": 30, "nodes": 10}


def reduced_domain() -> IntegerDomain:
    """Small desk-scale MLP lattice (32 points)."""
    return build_domain([
        DimensionSpec("epochs", (50, 100)),
        DimensionSpec("dropout", (0.0, 0.2)),
        DimensionSpec("batch", (50,)),
        DimensionSpec("layers", (1, 2)),
        DimensionSpec("lag", (10, 30)),
        DimensionSpec("nodes", (5, 10)),
    ])


@dataclass
class HpoProblemSpec:
    """Everything needed to turn hyperparameters into a test loss.

    ``series`` may be a loaded :class:`DailySeries`, a path to a series
    file, or a :class:`HydrographParams` / mapping of generator options.
    ``test_mode`` is ``"dynamic"`` (default: test-period groundwater inputs
    come from the model's own predictions) or ``"static"`` (one-step
    predictions from observed history).
    """

    series: object
    domain: IntegerDomain
    train_count: int
    wells: Sequence[str] | None = None
    replicates: int = 5
    defaults: Mapping[str, float] = field(default_factory=dict)
    test_mode: str = "dynamic"

    def __post_init__(self):
        unknown = [n for n in self.domain.names if n not in HYPERPARAMETERS]
        if unknown:
            raise ValueError(f"unknown hyperparameter dimensions {unknown}; allowed: {HYPERPARAMETERS}")
        if self.test_mode not in ("dynamic", "static"):
            raise ValueError("test_mode must be 'dynamic' or 'static'")

    def load(self) -> DailySeries:
        s = self.series
        if isinstance(s, DailySeries):
            return s
        if isinstance(s, HydrographParams):
            return generate_hydrograph(s)
        if isinstance(s, Mapping):
            opts = dict(s)
            if "wells" in opts:
                opts["wells"] = tuple(opts["wells"])
            return generate_hydrograph(HydrographParams(**opts))
        return load_series(Path(s))


def persistence_mse(samples: LagSampleSet, series_scaled_gw: np.ndarray, mode: str = "dynamic") -> float:
    """Test MSE of the "tomorrow equals today" forecaster.

    In dynamic mode the last observed level before the test period is held
    for the whole period; in static mode each day's prediction is the
    previous day's observed level.
    """
    _, Y = samples.split("test")
    t = samples.target_index[samples.n_train:]
    if mode == "dynamic":
        pred = np.broadcast_to(series_scaled_gw[t[0] - 1], Y.shape)
    else:
        pred = series_scaled_gw[t - 1]
    return mse(pred, Y)


class MlpObjective:
    """Callable objective; ``evaluate(raw, seed)`` is pure per ``(raw, seed)``."""

    def __init__(self, spec: HpoProblemSpec):
        self.spec = spec
        self.series = spec.load()
        self.wells = tuple(self.series.wells if spec.wells is None else spec.wells)
        self.scaling = fit_scaling(self.series, self.wells)
        self.names = tuple(spec.domain.names)
        self.defaults = {**DEFAULT_HYPERPARAMETERS, **dict(spec.defaults)}
        order = self.series.variable_order(self.wells)
        self._gw_scaled = self.scaling.scale_series(self.series, [GW_PREFIX + w for w in self.wells])
        self.n_variables = len(order)
        self._samples: dict[int, LagSampleSet] = {}
        lags = [int(v) for v in self._values_of("lag")]
        for G in lags:
            self.samples(G)  # validate every lag up front

    def _values_of(self, name):
        if name in self.names:
            return self.spec.domain.dims[self.names.index(name)].values
        return (self.defaults[name],)

    def hyperparameters(self, raw) -> dict:
        raw = np.asarray(raw, dtype=float).ravel()
        hp = dict(self.defaults)
        hp.update(zip(self.names, raw.tolist()))
        return {
            "epochs": int(round(hp["epochs"])),
            "dropout": float(hp["dropout"]),
            "batch": int(round(hp["batch"])),
            "layers": int(round(hp["layers"])),
            "lag": int(round(hp["lag"])),
            "nodes": int(round(hp["nodes"])),
        }

    def samples(self, G: int) -> LagSampleSet:
        if G not in self._samples:
            self._samples[G] = build_lag_samples(self.series, self.scaling, G, self.spec.train_count, self.wells)
        return self._samples[G]

    def architecture(self, hp: Mapping) -> MlpArchitecture:
        return MlpArchitecture(
            input_width=(hp["lag"] + 1) * self.n_variables,
            hidden_layers=hp["layers"],
            nodes_per_layer=hp["nodes"],
            output_width=len(self.wells),
            dropout_rate=hp["dropout"],
        )

    def fit(self, raw, seed: int) -> tuple[MlpModel, LagSampleSet]:
        hp = self.hyperparameters(raw)
        samples = self.samples(hp["lag"])
        model = build_mlp(self.architecture(hp), seed)
        cfg = TrainConfig(epochs=hp["epochs"], batch_size=hp["batch"], seed=seed)
        return train(model, samples, cfg), samples

    def test_loss(self, model: MlpModel, samples: LagSampleSet) -> float:
        if self.spec.test_mode == "static":
            return evaluate_loss(model, samples, "test")
        _, Y = samples.split("test")
        start = int(samples.target_index[samples.n_train])
        pred = dynamic_forecast(model, self.series, self.scaling, start, Y.shape[0], samples.G,
                                wells=self.wells, normalized=True)
        return mse(pred, Y)

    def evaluate(self, raw, seed: int) -> float:
        model, samples = self.fit(raw, seed)
        return self.test_loss(model, samples)

    def persistence(self, G: int) -> float:
        return persistence_mse(self.samples(G), self._gw_scaled, self.spec.test_mode)


def make_objective(spec: HpoProblemSpec) -> MlpObjective:
    return MlpObjective(spec)


@dataclass
class OutOfSampleResult:
    dates: np.ndarray
    forecast: np.ndarray  # (horizon, W) level units
    truth: np.ndarray
    mse: float | None  # normalized units, None for an empty horizon
    rmse_levels: list[float] | None
    persistence_mse: float | None


def out_of_sample_run(objective: MlpObjective, raw, horizon: int, seed: int = 0,
                      series: DailySeries | None = None) -> OutOfSampleResult:
    """Retrain on everything before the last ``horizon`` days, then forecast them.

    ``series`` defaults to the objective's own series; pass a longer one
    (the search data plus the held-back days) to forecast beyond the data
    the search saw. The objective's scaling is reused either way. All
    samples whose targets precede the held-back period train the model,
    which then forecasts dynamically; the persistence forecast (last
    observed level held) is scored alongside.
    """
    series = objective.series if series is None else series
    scaling, wells = objective.scaling, objective.wells
    W = len(wells)
    if horizon <= 0:
        empty = np.empty((0, W))
        return OutOfSampleResult(series.dates[:0], empty, empty, None, None, None)
    L = len(series)
    hp = objective.hyperparameters(raw)
    G = hp["lag"]
    t0 = L - horizon
    if t0 - G < 1:
        raise ValueError("horizon leaves no training samples")
    samples = _samples_before(series, scaling, wells, G, t0)
    model = build_mlp(objective.architecture(hp), seed)
    model = train(model, samples, TrainConfig(epochs=hp["epochs"], batch_size=hp["batch"], seed=seed))
    pred_n = dynamic_forecast(model, series, scaling, t0, horizon, G, wells=wells, normalized=True)
    gw_scaled = scaling.scale_series(series, [GW_PREFIX + w for w in wells])
    truth_n = gw_scaled[t0:]
    pers_n = np.broadcast_to(gw_scaled[t0 - 1], truth_n.shape)
    forecast = np.column_stack([scaling.inverse(GW_PREFIX + w, pred_n[:, j]) for j, w in enumerate(wells)])
    truth = np.column_stack([series.columns[GW_PREFIX + w][t0:] for w in wells])
    rmse = [math.sqrt(mse(pred_n[:, j], truth_n[:, j])) * scaling.gw_range(w) for j, w in enumerate(wells)]
    return OutOfSampleResult(series.dates[t0:], forecast, truth, mse(pred_n, truth_n), rmse,
                             mse(pers_n, truth_n))


def _samples_before(series: DailySeries, scaling, wells, G: int, t0: int) -> LagSampleSet:
    full = build_lag_samples(series, scaling, G, 1, wells)
    keep = full.target_index < t0
    return LagSampleSet(G, full.inputs[keep], full.targets[keep], full.target_index[keep],
                        int(keep.sum()), full.variables)
