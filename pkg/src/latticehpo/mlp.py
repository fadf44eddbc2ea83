"""A small numpy multilayer perceptron trained with ADAM.

ReLU hidden layers of equal width, a linear output layer, inverted dropout
on hidden activations during training, mean squared error loss.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .timeseries import DailySeries, LagSampleSet, ScalingSpec, GW_PREFIX, window_inputs

__all__ = [
    "MlpArchitecture",
    "TrainConfig",
    "MlpModel",
    "Adam",
    "TrainingDiverged",
    "build_mlp",
    "forward",
    "loss_and_grads",
    "train",
    "evaluate_loss",
    "mse",
    "dynamic_forecast",
    "save_model",
    "load_model",
]


class TrainingDiverged(RuntimeError):
    """The training loss became non-finite."""


@dataclass(frozen=True)
class MlpArchitecture:
    input_width: int
    hidden_layers: int
    nodes_per_layer: int
    output_width: int = 1
    dropout_rate: float = 0.0

    def __post_init__(self):
        for name in ("input_width", "hidden_layers", "nodes_per_layer", "output_width"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_width, *[self.nodes_per_layer] * self.hidden_layers, self.output_width]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float = 0.001
    decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class MlpModel:
    arch: MlpArchitecture
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    final_loss: float = math.nan
    history: list[float] = field(default_factory=list)

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpModel":
        return MlpModel(self.arch, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.final_loss, list(self.history))

    def predict(self, X) -> np.ndarray:
        return forward(self, np.atleast_2d(np.asarray(X, dtype=float)))[0]


def build_mlp(arch: MlpArchitecture, seed: int = 0) -> MlpModel:
    """Untrained network; Glorot-uniform weights and zero biases."""
    rng = np.random.default_rng(seed)
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(arch, weights, biases)


def forward(model: MlpModel, X: np.ndarray, masks=None):
    """Returns ``(output, cache)``; ``masks`` are per-hidden-layer dropout scalings."""
    acts = [X]
    pre = []
    h = X
    n_hidden = len(model.weights) - 1
    for k in range(n_hidden):
        z = h @ model.weights[k] + model.biases[k]
        pre.append(z)
        h = np.maximum(z, 0.0)
        if masks is not None:
            h = h * masks[k]
        acts.append(h)
    out = h @ model.weights[-1] + model.biases[-1]
    return out, (acts, pre)


def loss_and_grads(model: MlpModel, X: np.ndarray, Y: np.ndarray, masks=None):
    """Mean squared error over all entries and its gradients (weights, then biases)."""
    out, (acts, pre) = forward(model, X, masks)
    diff = out - Y
    loss = float(np.mean(diff * diff))
    delta = 2.0 * diff / diff.size
    gw = [None] * len(model.weights)
    gb = [None] * len(model.biases)
    for k in range(len(model.weights) - 1, -1, -1):
        gw[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ model.weights[k].T
            if masks is not None:
                delta = delta * masks[k - 1]
            delta = delta * (pre[k - 1] > 0)
    return loss, gw + gb


class Adam:
    """Bias-corrected ADAM; ``decay`` shrinks the step as ``lr / (1 + decay * t)``."""

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8, decay=0.0):
        self.lr, self.beta1, self.beta2, self.eps, self.decay = lr, beta1, beta2, eps, decay
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads) -> None:
        """Update ``params`` in place."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr = self.lr / (1.0 + self.decay * (self.t - 1))
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _dropout_masks(model: MlpModel, m: int, rng: np.random.Generator):
    rate = model.arch.dropout_rate
    if rate <= 0.0:
        return None
    keep = 1.0 - rate
    return [(rng.random((m, w.shape[1])) < keep) / keep for w in model.weights[:-1]]


def train(model: MlpModel, samples, cfg: TrainConfig) -> MlpModel:
    """Mini-batch ADAM on the training split; returns a new trained model.

    ``samples`` is a :class:`LagSampleSet` (its train split is used) or an
    ``(X, Y)`` pair. Each epoch reshuffles with a generator derived from
    ``cfg.seed``; the trailing partial batch is kept.
    """
    if isinstance(samples, LagSampleSet):
        X, Y = samples.split("train")
    else:
        X, Y = samples
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[1] != model.arch.input_width:
        raise ValueError(f"input width {X.shape[1]} != architecture width {model.arch.input_width}")
    out = model.copy()
    if cfg.epochs == 0:
        return out
    params = out.params()
    opt = Adam(params, lr=cfg.learning_rate, decay=cfg.decay)
    rng = np.random.default_rng([cfg.seed, 0x5EED])
    n = X.shape[0]
    bs = min(cfg.batch_size, n)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            masks = _dropout_masks(out, idx.size, rng)
            loss, grads = loss_and_grads(out, X[idx], Y[idx], masks)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"loss became {loss} in epoch {epoch}")
            opt.step(params, grads)
            total += loss * idx.size
        history.append(total / n)
    out.history = history
    out.final_loss = history[-1]
    return out


def mse(pred, target) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    return float(np.mean((pred.reshape(target.shape) - target) ** 2))


def evaluate_loss(model: MlpModel, samples: LagSampleSet, split: str = "test") -> float:
    """One-step MSE (normalized units, dropout off) on a split, averaged over wells."""
    X, Y = samples.split(split)
    return mse(model.predict(X), Y)


def dynamic_forecast(model: MlpModel, series: DailySeries, scaling: ScalingSpec, start, horizon: int,
                     G: int, *, wells=None, normalized: bool = False, record_inputs=None):
    """Forecast ``horizon`` days from ``start`` feeding predictions back as history.

    Exogenous and calendar values are taken from ``series``; groundwater
    history before ``start`` is the observed series, and from ``start`` on
    each day's input window uses the model's own earlier predictions.
    ``start`` is a date or a day index. Returns an ``(horizon, W)`` array in
    level units (or scaled units with ``normalized=True``). If
    ``record_inputs`` is a list, every input row is appended to it.
    """
    wells = list(scaling.wells if wells is None else wells)
    t0 = start if isinstance(start, (int, np.integer)) else series.index_of(start)
    if t0 < G:
        raise ValueError(f"need {G} days of history before the forecast start")
    if t0 + horizon > len(series):
        raise ValueError("exogenous data do not cover the forecast horizon")
    order = series.variable_order(wells)
    gw_cols = [order.index(GW_PREFIX + w) for w in wells]
    Z = scaling.scale_series(series.slice(0, t0 + horizon), order)
    preds = np.empty((horizon, len(wells)))
    for k in range(horizon):
        t = t0 + k
        row = window_inputs(Z, t, G, gw_cols)
        if record_inputs is not None:
            record_inputs.append(row[0].copy())
        y = model.predict(row)[0]
        preds[k] = y
        Z[t, gw_cols] = y  # later windows see the prediction, not the observation
    if normalized:
        return preds
    return np.column_stack([scaling.inverse(GW_PREFIX + w, preds[:, j]) for j, w in enumerate(wells)])


def save_model(model: MlpModel, path) -> None:
    """``.npz`` container: JSON architecture header plus one array per layer."""
    arrays = {"header": np.frombuffer(json.dumps({"arch": asdict(model.arch),
                                                    "final_loss": model.final_loss}).encode(),
                                       dtype=np.uint8)}
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{k}"] = w
        arrays[f"b{k}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path) -> MlpModel:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        arch = MlpArchitecture(**header["arch"])
        n = arch.hidden_layers + 1
        weights = [data[f"W{k}"].copy() for k in range(n)]
        biases = [data[f"b{k}"].copy() for k in range(n)]
    return MlpModel(arch, weights, biases, float(header["final_loss"]))
