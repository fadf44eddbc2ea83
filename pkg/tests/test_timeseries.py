import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latticehpo.hydrograph import generate_hydrograph
from latticehpo.timeseries import (
    DailySeries,
    SeriesError,
    build_lag_samples,
    fit_scaling,
    invert_groundwater,
    load_series,
    rmse_in_level_units,
    save_series,
)


def tiny_series(n=5, wells=("a",)):
    rng = np.random.default_rng(n)
    dates = np.arange(np.datetime64("2020-01-01"), np.datetime64("2020-01-01") + n)
    cols = {"temp": rng.uniform(3, 41, n), "precip": rng.uniform(0, 10, n), "streamflow": rng.uniform(0, 50, n)}
    for w in wells:
        cols[f"gw_{w}"] = rng.uniform(30, 60, n)
    return DailySeries(dates, cols)


def test_lag_counts_for_five_days():
    s = tiny_series(5)
    sc = fit_scaling(s)
    assert len(s.variable_order()) == 6
    one = build_lag_samples(s, sc, 1, 1)
    two = build_lag_samples(s, sc, 2, 1)
    assert one.inputs.shape == (4, 12)
    assert two.inputs.shape == (3, 18)


def test_fixed_training_count():
    s = tiny_series(10)
    sc = fit_scaling(s)
    for G in (1, 2):
        ls = build_lag_samples(s, sc, G, 3)
        assert ls.split("train")[0].shape[0] == 3
        assert ls.inputs.shape[1] == (G + 1) * 6


def test_too_short_series():
    s = tiny_series(5)
    with pytest.raises(SeriesError):
        build_lag_samples(s, fit_scaling(s), 2, 2)


def test_window_layout_and_target():
    s = tiny_series(6)
    sc = fit_scaling(s)
    order = s.variable_order()
    Z = sc.scale_series(s, order)
    ls = build_lag_samples(s, sc, 2, 2)
    gw = order.index("gw_a")
    for row, t, y in zip(ls.inputs, ls.target_index, ls.targets):
        block = row.reshape(3, 6)
        np.testing.assert_array_equal(block[:2], Z[t - 2:t])
        assert block[2, gw] == 0.0
        np.testing.assert_array_equal(np.delete(block[2], gw), np.delete(Z[t], gw))
        assert y[0] == Z[t, gw]


def test_scaling_rules():
    dates = np.arange(np.datetime64("2021-03-01"), np.datetime64("2021-03-04"))
    s = DailySeries(dates, {"temp": [3.0, 41.0, 20.0], "precip": [0.0, 1.0, 2.0],
                            "streamflow": [0.0, 9.0, 99.0], "gw_x": [37.2, 60.1, 50.0]})
    sc = fit_scaling(s)
    assert sc.bounds["gw_x"] == (0.0, 60.1)
    np.testing.assert_allclose(sc.transform("temp", [3.0, 41.0]), [0.0, 1.0])
    assert math.log(10) == pytest.approx(2.302585, abs=1e-6)
    np.testing.assert_allclose(sc.transform("streamflow", [0.0, 9.0, 99.0]), [0.0, 0.5, 1.0], atol=1e-12)
    np.testing.assert_allclose(sc.transform("week", [53.0]), [1.0])
    np.testing.assert_allclose(sc.transform("month", [12.0]), [1.0])
    assert invert_groundwater(sc, 0.0) == 0.0
    assert invert_groundwater(sc, 1.0) == pytest.approx(60.1)


def test_constant_column_rejected():
    dates = np.arange(np.datetime64("2021-03-01"), np.datetime64("2021-03-04"))
    s = DailySeries(dates, {"temp": [1.0, 1.0, 1.0], "precip": [0.0, 1.0, 2.0],
                            "streamflow": [0.0, 9.0, 99.0], "gw_x": [37.2, 60.1, 50.0]})
    with pytest.raises(SeriesError, match="temp"):
        fit_scaling(s)


def test_rmse_conversion():
    from latticehpo.timeseries import ScalingSpec
    sc = ScalingSpec(bounds={"gw_w": (0.0, 43.0)}, log_vars=(), wells=("w",))
    assert rmse_in_level_units(0.00054, sc, "w") == pytest.approx(1.0, abs=0.01)


@given(st.lists(st.floats(0, 200), min_size=3, max_size=20))
def test_groundwater_round_trip(levels):
    if max(levels) <= 0:
        return
    n = len(levels)
    dates = np.arange(np.datetime64("2000-01-01"), np.datetime64("2000-01-01") + n)
    s = DailySeries(dates, {"temp": np.arange(n, dtype=float), "precip": np.arange(n, dtype=float),
                            "streamflow": np.arange(n, dtype=float), "gw_w": levels})
    sc = fit_scaling(s)
    z = sc.transform("gw_w", np.array(levels))
    assert np.all((z >= 0) & (z <= 1))
    np.testing.assert_allclose(invert_groundwater(sc, z, "w"), levels, atol=1e-10)


def test_scaled_samples_in_unit_interval():
    s = generate_hydrograph(n_days=400, wells=("a", "b"))
    ls = build_lag_samples(s, fit_scaling(s), 7, 300)
    assert ls.targets.shape[1] == 2
    assert ls.inputs.min() >= 0 and ls.inputs.max() <= 1
    assert ls.targets.min() >= 0 and ls.targets.max() <= 1


def test_load_round_trip(tmp_path):
    s = generate_hydrograph(n_days=2900, seed=3)
    p = tmp_path / "s.csv"
    save_series(s, p)
    back = load_series(p)
    assert len(back) == 2900
    assert back.variable_order() == s.variable_order()
    np.testing.assert_allclose(back.columns["gw_w1"], s.columns["gw_w1"], atol=1e-6)


def test_load_five_rows(tmp_path):
    p = tmp_path / "five.csv"
    lines = ["date,temp,precip,streamflow,gw_a"]
    for k in range(5):
        lines.append(f"2022-01-0{k + 1},{k},{k * 2},{k + 1},{40 + k}")
    p.write_text("\n".join(lines) + "\n")
    s = load_series(p)
    assert len(s) == 5
    assert s.columns["week"].shape == (5,)


def test_load_reports_gap(tmp_path):
    p = tmp_path / "gap.csv"
    p.write_text("date,temp,precip,streamflow,gw_a\n2022-01-01,1,0,1,40\n2022-01-03,2,0,1,41\n")
    with pytest.raises(SeriesError, match="2022-01-02"):
        load_series(p)


def test_load_reports_missing_value_line(tmp_path):
    p = tmp_path / "na.csv"
    p.write_text("date,temp,precip,streamflow,gw_a\n2022-01-01,1,0,1,40\n2022-01-02,,0,1,41\n")
    with pytest.raises(SeriesError, match=":3:"):
        load_series(p)
