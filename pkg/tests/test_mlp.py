import math

import numpy as np
import pytest

from latticehpo.hydrograph import generate_hydrograph
from latticehpo.mlp import (
    Adam,
    MlpArchitecture,
    TrainConfig,
    build_mlp,
    dynamic_forecast,
    evaluate_loss,
    forward,
    load_model,
    loss_and_grads,
    mse,
    save_model,
    train,
)
from latticehpo.timeseries import GW_PREFIX, LagSampleSet, build_lag_samples, fit_scaling


def numeric_grads(model, X, Y, eps=1e-5):
    out = []
    for P in model.params():
        g = np.zeros_like(P)
        for idx in np.ndindex(P.shape):
            old = P[idx]
            P[idx] = old + eps
            lp, _ = loss_and_grads(model, X, Y)
            P[idx] = old - eps
            lm, _ = loss_and_grads(model, X, Y)
            P[idx] = old
            g[idx] = (lp - lm) / (2 * eps)
        out.append(g)
    return out


@pytest.mark.parametrize("layers", [1, 2, 3])
def test_gradient_check(layers):
    rng = np.random.default_rng(layers)
    model = build_mlp(MlpArchitecture(5, layers, 6, 2), seed=layers)
    for b in model.biases:
        b += rng.normal(scale=0.1, size=b.shape)
    X, Y = rng.normal(size=(9, 5)), rng.normal(size=(9, 2))
    _, analytic = loss_and_grads(model, X, Y)
    for a, n in zip(analytic, numeric_grads(model, X, Y)):
        err = np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12)
        assert err <= 1e-4


def test_gradients_with_dropout_masks():
    rng = np.random.default_rng(0)
    model = build_mlp(MlpArchitecture(4, 2, 5, 1, dropout_rate=0.5), seed=0)
    X, Y = rng.normal(size=(6, 4)), rng.normal(size=(6, 1))
    masks = [(rng.random((6, 5)) < 0.5) / 0.5 for _ in range(2)]
    _, analytic = loss_and_grads(model, X, Y, masks)
    eps = 1e-6
    P = model.weights[0]
    old = P[1, 2]
    P[1, 2] = old + eps
    lp, _ = loss_and_grads(model, X, Y, masks)
    P[1, 2] = old - eps
    lm, _ = loss_and_grads(model, X, Y, masks)
    P[1, 2] = old
    assert analytic[0][1, 2] == pytest.approx((lp - lm) / (2 * eps), rel=1e-5, abs=1e-9)


def test_adam_matches_hand_stepped_oracle():
    theta = [np.array([0.5, -1.0, 2.0])]
    grads_seq = [np.array([0.1, -0.2, 0.3]) * (k + 1) for k in range(5)]
    opt = Adam(theta, lr=0.001)
    ref = [0.5, -1.0, 2.0]
    m = [0.0] * 3
    v = [0.0] * 3
    for t, g in enumerate(grads_seq, start=1):
        opt.step(theta, [g])
        for i in range(3):
            m[i] = 0.9 * m[i] + 0.1 * g[i]
            v[i] = 0.999 * v[i] + 0.001 * g[i] ** 2
            mhat = m[i] / (1 - 0.9**t)
            vhat = v[i] / (1 - 0.999**t)
            ref[i] -= 0.001 * mhat / (math.sqrt(vhat) + 1e-8)
    np.testing.assert_allclose(theta[0], ref, atol=1e-12, rtol=0)


def test_shapes_and_determinism():
    m = build_mlp(MlpArchitecture(12, 1, 5, 1), seed=4)
    assert [w.shape for w in m.weights] == [(12, 5), (5, 1)]
    assert [b.shape for b in m.biases] == [(5,), (1,)]
    m2 = build_mlp(MlpArchitecture(12, 1, 5, 1), seed=4)
    for a, b in zip(m.params(), m2.params()):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        MlpArchitecture(12, 0, 5, 1)


def test_overfit_memorizable_set():
    rng = np.random.default_rng(0)
    X, Y = rng.random((8, 3)), rng.random((8, 1))
    m = build_mlp(MlpArchitecture(3, 2, 32, 1), seed=0)
    trained = train(m, (X, Y), TrainConfig(epochs=500, batch_size=8, learning_rate=0.01))
    assert trained.final_loss <= 1e-4
    assert mse(trained.predict(X), Y) <= 1e-4


def test_zero_epochs_keeps_weights():
    m = build_mlp(MlpArchitecture(3, 2, 4, 1), seed=1)
    t = train(m, (np.zeros((5, 3)), np.zeros((5, 1))), TrainConfig(epochs=0, batch_size=2))
    for a, b in zip(m.params(), t.params()):
        np.testing.assert_array_equal(a, b)


def test_training_is_reproducible():
    rng = np.random.default_rng(2)
    X, Y = rng.random((37, 4)), rng.random((37, 1))
    cfg = TrainConfig(epochs=5, batch_size=10, seed=3)
    a = train(build_mlp(MlpArchitecture(4, 2, 5, 1), 3), (X, Y), cfg)
    b = train(build_mlp(MlpArchitecture(4, 2, 5, 1), 3), (X, Y), cfg)
    for p, q in zip(a.params(), b.params()):
        np.testing.assert_array_equal(p, q)
    assert len(a.history) == 5


def test_width_mismatch_rejected():
    m = build_mlp(MlpArchitecture(3, 1, 4, 1), seed=1)
    with pytest.raises(ValueError):
        train(m, (np.zeros((5, 4)), np.zeros((5, 1))), TrainConfig(1, 2))


def constant_model(width, c, wells=1):
    m = build_mlp(MlpArchitecture(width, 1, 3, wells), seed=0)
    m.weights[-1][:] = 0.0
    m.biases[-1][:] = c
    return m


def test_evaluate_loss_examples():
    X = np.random.default_rng(0).random((6, 4))
    ls = LagSampleSet(1, X, np.full((6, 1), 0.5), np.arange(6), 3, ("a", "b"))
    assert evaluate_loss(constant_model(4, 0.0), ls, "test") == 0.25
    assert evaluate_loss(constant_model(4, 0.5), ls, "all") == 0.0


def test_evaluate_loss_two_pass_oracle_and_permutation():
    rng = np.random.default_rng(5)
    X, Y = rng.random((20, 4)), rng.random((20, 2))
    m = build_mlp(MlpArchitecture(4, 2, 6, 2), seed=2)
    ls = LagSampleSet(1, X, Y, np.arange(20), 10, ("a", "b"))
    got = evaluate_loss(m, ls, "test")
    pred = m.predict(X[10:])
    total = 0.0
    for i in range(10):
        for j in range(2):
            total += (pred[i, j] - Y[10 + i, j]) ** 2
    assert got == pytest.approx(total / 20, abs=1e-12)
    perm = rng.permutation(10) + 10
    ls2 = LagSampleSet(1, np.vstack([X[:10], X[perm]]), np.vstack([Y[:10], Y[perm]]), np.arange(20), 10,
                       ("a", "b"))
    assert evaluate_loss(m, ls2, "test") == pytest.approx(got, abs=1e-15)


@pytest.fixture(scope="module")
def series():
    return generate_hydrograph(n_days=200, wells=("a", "b"), seed=1)


def test_dynamic_horizon_one_is_static(series):
    sc = fit_scaling(series)
    G = 4
    ls = build_lag_samples(series, sc, G, 100)
    m = build_mlp(MlpArchitecture(ls.width, 1, 5, 2), seed=1)
    t0 = int(ls.target_index[120])
    dyn = dynamic_forecast(m, series, sc, t0, 1, G, normalized=True)
    np.testing.assert_allclose(dyn[0], m.predict(ls.inputs[120:121])[0], atol=1e-14)


def test_constant_model_gives_flat_forecast(series):
    sc = fit_scaling(series)
    G = 3
    m = constant_model((G + 1) * 7, 0.8, wells=2)
    out = dynamic_forecast(m, series, sc, 50, 30, G)
    np.testing.assert_allclose(out[:, 0], sc.inverse("gw_a", 0.8))
    np.testing.assert_allclose(out[:, 1], sc.inverse("gw_b", 0.8))


def test_dynamic_feedback_replay(series):
    sc = fit_scaling(series)
    G = 5
    wells = ["a", "b"]
    V = 7
    m = build_mlp(MlpArchitecture((G + 1) * V, 2, 6, 2), seed=7)
    rows = []
    t0, H = 60, 12
    pred = dynamic_forecast(m, series, sc, t0, H, G, normalized=True, record_inputs=rows)
    order = series.variable_order(wells)
    Z = sc.scale_series(series, order)
    gw_cols = [order.index(GW_PREFIX + w) for w in wells]
    for k, row in enumerate(rows):
        block = row.reshape(G + 1, V)
        t = t0 + k
        for j in range(G):
            day = t - G + j
            expect = pred[day - t0] if day >= t0 else Z[day, gw_cols]
            np.testing.assert_array_equal(block[j, gw_cols], expect)
        assert np.all(block[G, gw_cols] == 0.0)
        ex = [c for c in range(V) if c not in gw_cols]
        np.testing.assert_array_equal(block[:, ex], Z[t - G:t + 1][:, ex])
        np.testing.assert_allclose(m.predict(row)[0], pred[k], atol=1e-14)


def test_forecast_needs_exogenous_data(series):
    sc = fit_scaling(series)
    m = build_mlp(MlpArchitecture(4 * 7, 1, 3, 2), seed=0)
    with pytest.raises(ValueError):
        dynamic_forecast(m, series, sc, 190, 20, 3)


def test_forecast_by_date(series):
    sc = fit_scaling(series)
    m = build_mlp(MlpArchitecture(4 * 7, 1, 3, 2), seed=0)
    a = dynamic_forecast(m, series, sc, series.dates[40], 5, 3)
    b = dynamic_forecast(m, series, sc, 40, 5, 3)
    np.testing.assert_array_equal(a, b)


def test_save_load_round_trip(tmp_path):
    m = build_mlp(MlpArchitecture(6, 2, 4, 1, 0.2), seed=3)
    p = tmp_path / "m.npz"
    save_model(m, p)
    back = load_model(p)
    assert back.arch == m.arch
    X = np.random.default_rng(0).random((3, 6))
    np.testing.assert_array_equal(forward(back, X)[0], forward(m, X)[0])
