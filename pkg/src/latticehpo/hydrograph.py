"""Synthetic daily weather, streamflow and groundwater series.

A stand-in for real well records. Temperature and rainfall follow seasonal
templates, streamflow is a linear reservoir fed by rain, and each well's
level relaxes towards a target built from a seasonal drawdown, recent
streamflow, a slow drought trend and noise.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import asdict, dataclass

import numpy as np

from .timeseries import DailySeries

__all__ = ["HydrographParams", "generate_hydrograph"]


@dataclass(frozen=True)
class HydrographParams:
    n_days: int = 1500
    start: str = "2010-01-01"
    wells: tuple[str, ...] = ("w1",)
    seed: int = 0
    temp_mean: float = 16.0
    temp_amplitude: float = 9.0
    rain_prob_dry: float = 0.05
    rain_prob_wet: float = 0.4
    rain_mean_mm: float = 9.0
    flow_recession: float = 0.85
    flow_gain: float = 1.5
    flow_base: float = 2.0
    gw_base: float = 45.0
    gw_seasonal: float = 5.0  # summer drawdown amplitude, level units
    gw_flow_gain: float = 2.0  # response to log streamflow
    gw_memory: float = 0.8  # daily relaxation factor towards the target level
    gw_trend_per_year: float = -0.4
    gw_noise: float = 0.05

    def to_dict(self) -> dict:
        out = asdict(self)
        out["wells"] = list(self.wells)
        return out


def generate_hydrograph(params: HydrographParams | None = None, **overrides) -> DailySeries:
    """Generate a gap-free :class:`DailySeries`; deterministic per ``seed``.

    Keyword overrides replace fields of ``params`` (or of the defaults).
    """
    p = params or HydrographParams()
    if overrides:
        p = HydrographParams(**{**asdict(p), **overrides})
    rng = np.random.default_rng(p.seed)
    n = int(p.n_days)
    start = _dt.date.fromisoformat(p.start)
    dates = np.arange(np.datetime64(start), np.datetime64(start) + n, dtype="datetime64[D]")
    doy = np.array([d.timetuple().tm_yday for d in dates.astype(object)], dtype=float)
    phase = 2.0 * np.pi * doy / 365.25

    # warmest around late July
    temp = p.temp_mean - p.temp_amplitude * np.cos(phase - 2.0 * np.pi * 25 / 365.25)
    temp_noise = np.zeros(n)
    for t in range(1, n):
        temp_noise[t] = 0.7 * temp_noise[t - 1] + rng.normal(0.0, 1.5)
    temp = temp + temp_noise

    # wet winters, dry summers
    wetness = 0.5 * (1.0 + np.cos(phase - 2.0 * np.pi * 15 / 365.25))
    p_rain = p.rain_prob_dry + (p.rain_prob_wet - p.rain_prob_dry) * wetness
    rain = np.where(rng.random(n) < p_rain, rng.exponential(p.rain_mean_mm, n), 0.0)

    flow = np.empty(n)
    q = p.flow_base
    for t in range(n):
        q = p.flow_recession * q + p.flow_gain * rain[t]
        flow[t] = q + p.flow_base
    log_flow = np.log1p(flow)

    years = np.arange(n) / 365.25
    columns = {"temp": temp, "precip": rain, "streamflow": flow}
    for j, well in enumerate(p.wells):
        offset = 3.0 * j
        gain = p.gw_flow_gain * (1.0 + 0.25 * j)
        target = (
            p.gw_base + offset
            - p.gw_seasonal * np.sin(phase - 2.0 * np.pi * 120 / 365.25)
            + gain * (log_flow - log_flow.mean())
            + p.gw_trend_per_year * years
        )
        level = np.empty(n)
        g = target[0]
        for t in range(n):
            g = p.gw_memory * g + (1.0 - p.gw_memory) * target[t] + rng.normal(0.0, p.gw_noise)
            level[t] = g
        columns[f"gw_{well}"] = level
    return DailySeries(dates, columns)
