"""Daily multivariate series, [0, 1] scaling and lag-window samples.

Column layout of a series file (comma separated, ISO dates, no gaps)::

    date,temp,precip,streamflow,gw_<well1>[,gw_<well2> ...][,week,month]

``week`` and ``month`` are derived from the dates when absent. Gap filling
is deliberately not done here; gaps and missing values are rejected.

Lag samples
-----------
A sample is anchored at a target day ``t`` and covers the ``G + 1`` days
``t - G .. t``. Its input holds every variable on those days, except that
the groundwater levels of day ``t`` itself (the values being predicted) are
masked to 0; the target is the groundwater level of day ``t``. A series of
length ``L`` thus yields ``L - G`` samples of width ``(G + 1) * V``: with
five days and six variables, ``G = 1`` gives four samples of 12 values and
``G = 2`` three samples of 18 values.
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "SeriesError",
    "DailySeries",
    "ScalingSpec",
    "LagSampleSet",
    "EXOGENOUS",
    "CALENDAR",
    "load_series",
    "save_series",
    "fit_scaling",
    "build_lag_samples",
    "invert_groundwater",
    "rmse_in_level_units",
]

EXOGENOUS = ("temp", "precip", "streamflow")
CALENDAR = ("week", "month")
GW_PREFIX = "gw_"
WEEK_MAX, MONTH_MAX = 53.0, 12.0


class SeriesError(ValueError):
    """Malformed or unusable series data."""


def _calendar(dates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    days = dates.astype("datetime64[D]").astype(object)
    week = np.array([d.isocalendar()[1] for d in days], dtype=float)
    month = np.array([d.month for d in days], dtype=float)
    return week, month


@dataclass(frozen=True)
class DailySeries:
    """Gap-free daily observations; columns are float arrays aligned to ``dates``."""

    dates: np.ndarray  # datetime64[D]
    columns: Mapping[str, np.ndarray]

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        cols = {k: np.asarray(v, dtype=float).copy() for k, v in self.columns.items()}
        n = dates.shape[0]
        if n == 0:
            raise SeriesError("empty series")
        for k, v in cols.items():
            if v.shape != (n,):
                raise SeriesError(f"column {k!r} has length {v.shape[0]}, expected {n}")
            if not np.all(np.isfinite(v)):
                bad = int(np.flatnonzero(~np.isfinite(v))[0])
                raise SeriesError(f"column {k!r} has a missing value on {dates[bad]}")
            v.setflags(write=False)
        steps = np.diff(dates).astype(int)
        if np.any(steps != 1):
            i = int(np.flatnonzero(steps != 1)[0])
            raise SeriesError(f"dates are not consecutive after {dates[i]} (next is {dates[i + 1]})")
        missing = [c for c in EXOGENOUS if c not in cols]
        if missing:
            raise SeriesError(f"missing required columns {missing}")
        if not any(k.startswith(GW_PREFIX) for k in cols):
            raise SeriesError("no groundwater column (gw_<well>)")
        if "week" not in cols or "month" not in cols:
            week, month = _calendar(dates)
            cols.setdefault("week", week)
            cols.setdefault("month", month)
        dates.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "columns", cols)

    def __len__(self) -> int:
        return self.dates.shape[0]

    @property
    def wells(self) -> list[str]:
        return [k[len(GW_PREFIX):] for k in self.columns if k.startswith(GW_PREFIX)]

    def variable_order(self, wells: Sequence[str] | None = None) -> list[str]:
        """Column order used for model inputs: exogenous, groundwater, calendar."""
        wells = self.wells if wells is None else list(wells)
        return [*EXOGENOUS, *(GW_PREFIX + w for w in wells), *CALENDAR]

    def slice(self, start: int, stop: int) -> "DailySeries":
        return DailySeries(self.dates[start:stop], {k: v[start:stop] for k, v in self.columns.items()})

    def index_of(self, date) -> int:
        d = np.datetime64(date, "D")
        k = int((d - self.dates[0]).astype(int))
        if not 0 <= k < len(self):
            raise SeriesError(f"{d} is outside {self.dates[0]} .. {self.dates[-1]}")
        return k


def load_series(path) -> DailySeries:
    """Read and validate a comma-separated daily series file."""
    path = Path(path)
    dates, rows = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SeriesError(f"{path}: empty file") from None
        if not header or header[0].lower() != "date":
            raise SeriesError(f"{path}: first column must be 'date'")
        names = header[1:]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SeriesError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                dates.append(_dt.date.fromisoformat(row[0].strip()))
            except ValueError:
                raise SeriesError(f"{path}:{lineno}: bad date {row[0]!r}") from None
            vals = []
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if cell == "" or cell.lower() in ("na", "nan"):
                    raise SeriesError(f"{path}:{lineno}: missing value in column {name!r}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise SeriesError(f"{path}:{lineno}: cannot parse {cell!r} in column {name!r}") from None
            rows.append(vals)
    if not rows:
        raise SeriesError(f"{path}: no data rows")
    for a, b in zip(dates, dates[1:]):
        if (b - a).days != 1:
            missing = a + _dt.timedelta(days=1)
            raise SeriesError(f"{path}: gap in dates, {missing.isoformat()} is missing (after {a.isoformat()})")
    data = np.array(rows, dtype=float)
    return DailySeries(np.array(dates, dtype="datetime64[D]"),
                       {name: data[:, j] for j, name in enumerate(names)})


def save_series(series: DailySeries, path, *, float_format: str = "%.6f") -> None:
    names = list(series.columns)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *names])
        for i, d in enumerate(series.dates):
            w.writerow([str(d), *(float_format % series.columns[n][i] for n in names)])


@dataclass(frozen=True)
class ScalingSpec:
    """Per-variable affine map to [0, 1], optionally after ``log(x + 1)``.

    Groundwater uses a lower bound of 0 and the observed maximum as upper
    bound, so levels above the historical maximum map above 1.
    """

    bounds: Mapping[str, tuple[float, float]]
    log_vars: frozenset = field(default_factory=frozenset)
    wells: tuple[str, ...] = ()

    def _pre(self, name, x):
        x = np.asarray(x, dtype=float)
        return np.log1p(x) if name in self.log_vars else x

    def transform(self, name: str, x) -> np.ndarray:
        lo, hi = self.bounds[name]
        return (self._pre(name, x) - lo) / (hi - lo)

    def inverse(self, name: str, z) -> np.ndarray:
        lo, hi = self.bounds[name]
        v = np.asarray(z, dtype=float) * (hi - lo) + lo
        return np.expm1(v) if name in self.log_vars else v

    def gw_range(self, well: str) -> float:
        lo, hi = self.bounds[GW_PREFIX + well]
        return hi - lo

    def scale_series(self, series: DailySeries, order: Sequence[str]) -> np.ndarray:
        """``(L, V)`` matrix of scaled columns in ``order``."""
        return np.column_stack([self.transform(n, series.columns[n]) for n in order])


def fit_scaling(series: DailySeries, wells: Sequence[str] | None = None) -> ScalingSpec:
    """Min-max bounds from the data; see :class:`ScalingSpec` for the exceptions.

    Streamflow is log-transformed (``log(x + 1)``, so zero flow is allowed)
    before its bounds are taken. Week and month use the fixed ranges
    ``[0, 53]`` and ``[0, 12]``.
    """
    wells = tuple(series.wells if wells is None else wells)
    bounds: dict[str, tuple[float, float]] = {}
    for name in EXOGENOUS:
        x = series.columns[name]
        if name == "streamflow":
            if np.any(x <= -1):
                raise SeriesError("streamflow must be > -1 for the log(x + 1) transform")
            x = np.log1p(x)
        lo, hi = float(x.min()), float(x.max())
        if not hi > lo:
            raise SeriesError(f"column {name!r} is constant; cannot scale it")
        bounds[name] = (lo, hi)
    for w in wells:
        key = GW_PREFIX + w
        if key not in series.columns:
            raise SeriesError(f"no groundwater column {key!r}")
        hi = float(series.columns[key].max())
        if not hi > 0.0:
            raise SeriesError(f"column {key!r} has no positive level; cannot scale it")
        bounds[key] = (0.0, hi)
    bounds["week"] = (0.0, WEEK_MAX)
    bounds["month"] = (0.0, MONTH_MAX)
    return ScalingSpec(bounds, frozenset({"streamflow"}), wells)


@dataclass(frozen=True)
class LagSampleSet:
    G: int
    inputs: np.ndarray  # (S, (G+1)*V)
    targets: np.ndarray  # (S, W)
    target_index: np.ndarray  # day index of each sample's target
    n_train: int
    variables: tuple[str, ...]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def width(self) -> int:
        return self.inputs.shape[1]

    def split(self, which: str):
        if which == "train":
            sl = slice(0, self.n_train)
        elif which == "test":
            sl = slice(self.n_train, None)
        elif which == "all":
            sl = slice(None)
        else:
            raise ValueError(f"unknown split {which!r}")
        return self.inputs[sl], self.targets[sl]

    def __len__(self) -> int:
        return self.inputs.shape[0]


def window_inputs(Z: np.ndarray, t, G: int, gw_cols: Sequence[int]) -> np.ndarray:
    """Input rows for target days ``t`` from the scaled matrix ``Z``.

    Rows are the flattened ``(G + 1, V)`` blocks for days ``t - G .. t`` in
    day-major order, with the groundwater entries of day ``t`` zeroed.
    """
    t = np.atleast_1d(np.asarray(t))
    offs = np.arange(-G, 1)
    blocks = Z[t[:, None] + offs[None, :]]  # (S, G+1, V)
    blocks = blocks.copy()
    blocks[:, -1, list(gw_cols)] = 0.0
    return blocks.reshape(t.shape[0], -1)


def build_lag_samples(series: DailySeries, scaling: ScalingSpec, G: int, T: int,
                      wells: Sequence[str] | None = None) -> LagSampleSet:
    """Lag-window samples with the first ``T`` (chronologically) for training.

    :raises SeriesError: if ``len(series) < G + T + 2`` (no room for a test
        sample) or ``G < 1``.
    """
    wells = tuple(scaling.wells if wells is None else wells)
    L = len(series)
    if G < 1:
        raise SeriesError("lag G must be at least 1")
    if T < 1:
        raise SeriesError("training size T must be at least 1")
    if L < G + T + 2:
        raise SeriesError(f"series of {L} days is too short for lag {G} and {T} training samples")
    order = series.variable_order(wells)
    Z = scaling.scale_series(series, order)
    gw_cols = [order.index(GW_PREFIX + w) for w in wells]
    t = np.arange(G, L)
    X = window_inputs(Z, t, G, gw_cols)
    Y = Z[t][:, gw_cols]
    return LagSampleSet(G, X, Y, t, T, tuple(order))


def invert_groundwater(scaling: ScalingSpec, normalized, well: str | None = None) -> np.ndarray:
    """Map scaled groundwater back to level units (extrapolation allowed)."""
    well = scaling.wells[0] if well is None else well
    return scaling.inverse(GW_PREFIX + well, normalized)


def rmse_in_level_units(mse_normalized: float, scaling: ScalingSpec, well: str | None = None) -> float:
    """Convert a normalized MSE into an RMSE in groundwater level units."""
    well = scaling.wells[0] if well is None else well
    return math.sqrt(mse_normalized) * scaling.gw_range(well)
