import numpy as np
import pytest

from latticehpo.domain import DimensionSpec, build_domain
from latticehpo.driver import run_hpo
from latticehpo.hydrograph import HydrographParams, generate_hydrograph
from latticehpo.objective import (
    HpoProblemSpec,
    make_objective,
    out_of_sample_run,
    reduced_domain,
)

GOOD = (100, 0.0, 50, 2, 10, 10)


@pytest.fixture(scope="module")
def full_series():
    return generate_hydrograph(n_days=1865, seed=0)


@pytest.fixture(scope="module")
def objective(full_series):
    spec = HpoProblemSpec(series=full_series.slice(0, 1500), domain=reduced_domain(), train_count=1000)
    return make_objective(spec)


def test_reduced_domain_shape():
    dom = reduced_domain()
    assert dom.names == ["epochs", "dropout", "batch", "layers", "lag", "nodes"]
    assert dom.cardinality == 32


def test_unknown_dimension_rejected():
    dom = build_domain([DimensionSpec("learning_rate", (0.01, 0.1))])
    with pytest.raises(ValueError):
        HpoProblemSpec(series={}, domain=dom, train_count=10)


def test_same_seed_same_loss(objective):
    a = objective.evaluate(np.array([50, 0.2, 50, 1, 10, 5]), 3)
    b = objective.evaluate(np.array([50, 0.2, 50, 1, 10, 5]), 3)
    assert a == b


def test_learnable_configuration_exists(objective):
    assert objective.evaluate(np.array(GOOD), 0) <= 0.01


def test_architecture_matches_every_point(objective):
    dom = objective.spec.domain
    V = len(objective.series.variable_order(objective.wells))
    for p in dom.iter_points():
        hp = objective.hyperparameters(dom.to_raw(p))
        arch = objective.architecture(hp)
        assert arch.input_width == (hp["lag"] + 1) * V
        assert arch.output_width == 1
        assert objective.samples(hp["lag"]).n_train == 1000


def test_training_count_fixed_across_lags(objective):
    assert objective.samples(10).n_train == objective.samples(30).n_train == 1000


def test_evaluation_does_not_touch_the_data(objective):
    before = {k: v.copy() for k, v in objective.series.columns.items()}
    objective.evaluate(np.array([50, 0.0, 50, 1, 30, 5]), 1)
    for k, v in objective.series.columns.items():
        np.testing.assert_array_equal(v, before[k])


def test_defaults_fill_missing_dimensions():
    dom = build_domain([DimensionSpec("nodes", (4, 8))])
    spec = HpoProblemSpec(series={"n_days": 300}, domain=dom, train_count=200,
                          defaults={"epochs": 3, "lag": 5})
    obj = make_objective(spec)
    hp = obj.hyperparameters([8])
    assert hp == {"epochs": 3, "dropout": 0.0, "batch": 50, "layers": 1, "lag": 5, "nodes": 8}
    assert np.isfinite(obj.evaluate([8], 0))


def test_static_mode_and_persistence(full_series):
    spec = HpoProblemSpec(series=full_series.slice(0, 1500), domain=reduced_domain(), train_count=1000,
                          test_mode="static")
    obj = make_objective(spec)
    loss = obj.evaluate(np.array(GOOD), 0)
    assert 0 <= loss < 0.01
    # one-step persistence on a slowly varying level is already strong
    assert obj.persistence(10) < 1e-3


def test_multi_well_objective():
    spec = HpoProblemSpec(series={"n_days": 500, "wells": ["a", "b", "c"]}, domain=reduced_domain(),
                          train_count=300)
    obj = make_objective(spec)
    hp = obj.hyperparameters(reduced_domain().to_raw((0, 0, 0, 0, 0, 0)))
    assert obj.architecture(hp).output_width == 3
    assert np.isfinite(obj.evaluate(reduced_domain().to_raw((0, 0, 0, 0, 0, 0)), 0))


def test_runs_inside_the_driver(objective):
    tr = run_hpo(objective, objective.spec.domain, "random", budget=3, n0=2, n_replicates=1, rng=0)
    assert len(tr) == 3


def test_out_of_sample_empty_horizon(objective):
    r = out_of_sample_run(objective, GOOD, 0)
    assert r.forecast.shape == (0, 1)
    assert r.mse is None and r.rmse_levels is None and r.persistence_mse is None


def test_out_of_sample_forecast_tracks_truth(objective, full_series):
    r = out_of_sample_run(objective, GOOD, 365, seed=1, series=full_series)
    assert r.forecast.shape == r.truth.shape == (365, 1)
    np.testing.assert_array_equal(r.truth[:, 0], full_series.columns["gw_w1"][-365:])
    assert np.corrcoef(r.forecast[:, 0], r.truth[:, 0])[0, 1] >= 0.8
    # persistence oracle: the last observed level held flat
    gw = objective.scaling.transform("gw_w1", full_series.columns["gw_w1"])
    pers = float(np.mean((gw[-365:] - gw[-366]) ** 2))
    assert r.persistence_mse == pytest.approx(pers, rel=1e-12)
    assert r.mse < r.persistence_mse


def test_generator_is_deterministic():
    a = generate_hydrograph(HydrographParams(n_days=50, seed=9))
    b = generate_hydrograph(n_days=50, seed=9)
    for k in a.columns:
        np.testing.assert_array_equal(a.columns[k], b.columns[k])
