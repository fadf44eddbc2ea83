import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latticehpo.rbf import NonInvertibleDesignError, RbfFitError, fit_rbf, predict_rbf


def oracle_system(points, values):
    """Independent assembly of the interpolation saddle system, solved with lstsq."""
    X = np.asarray(points, float)
    n, d = X.shape
    Phi = np.array([[np.linalg.norm(a - b) ** 3 for b in X] for a in X])
    P = np.hstack([X, np.ones((n, 1))])
    A = np.zeros((n + d + 1, n + d + 1))
    A[:n, :n] = Phi
    A[:n, n:] = P
    A[n:, :n] = P.T
    rhs = np.concatenate([values, np.zeros(d + 1)])
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    lam, beta, beta0 = sol[:n], sol[n:n + d], sol[n + d]

    def f(q):
        q = np.asarray(q, float)
        return float(lam @ (np.linalg.norm(X - q, axis=1) ** 3) + beta @ q + beta0)

    return lam, beta, beta0, f


def random_design(rng, d, n, hi=10):
    while True:
        pts = rng.integers(0, hi + 1, size=(n, d))
        if len({tuple(p) for p in pts}) < n:
            continue
        P = np.hstack([pts, np.ones((n, 1))])
        if np.linalg.matrix_rank(P) == d + 1:
            return pts


def test_one_dimensional_two_point_fit():
    m = fit_rbf([[0], [2]], [0.0, 8.0])
    lam, beta, beta0, f = oracle_system([[0], [2]], np.array([0.0, 8.0]))
    assert predict_rbf(m, [0]) == pytest.approx(0.0, abs=1e-12)
    assert predict_rbf(m, [2]) == pytest.approx(8.0, abs=1e-12)
    assert m.orthogonality_residual() <= 1e-8
    assert predict_rbf(m, [1]) == pytest.approx(f([1]), abs=1e-10)
    np.testing.assert_allclose(m.lambdas, lam, atol=1e-12)


def test_constant_data():
    pts = [[0, 0], [1, 0], [0, 1], [3, 4]]
    m = fit_rbf(pts, [2.5] * 4)
    np.testing.assert_allclose(m.lambdas, 0.0, atol=1e-12)
    np.testing.assert_allclose(m.beta, 0.0, atol=1e-12)
    assert m.beta0 == pytest.approx(2.5)
    rng = np.random.default_rng(0)
    for q in rng.integers(-5, 10, size=(10, 2)):
        assert predict_rbf(m, q) == pytest.approx(2.5, abs=1e-10)


def test_quadratic_in_two_dims(rng):
    pts = random_design(rng, 2, 6)
    vals = pts[:, 0] ** 2 + pts[:, 1].astype(float)
    m = fit_rbf(pts, vals)
    _, _, _, f = oracle_system(pts, vals)
    for p, v in zip(pts, vals):
        assert abs(predict_rbf(m, p) - v) <= 1e-6 * max(1.0, abs(v))
    q = np.array([4, 5])
    assert predict_rbf(m, q) == pytest.approx(f(q), rel=1e-8, abs=1e-8)


def test_batch_prediction_matches_single(rng):
    pts = random_design(rng, 3, 8)
    vals = rng.normal(size=8)
    m = fit_rbf(pts, vals)
    Q = rng.integers(0, 10, size=(5, 3))
    np.testing.assert_allclose(predict_rbf(m, Q), [predict_rbf(m, q) for q in Q], rtol=1e-12)


def test_duplicate_points_rejected():
    with pytest.raises(RbfFitError):
        fit_rbf([[0, 0], [1, 0], [1, 0], [0, 1]], [1, 2, 3, 4])


def test_too_few_points_rejected():
    with pytest.raises(RbfFitError):
        fit_rbf([[0, 0], [1, 0]], [1, 2])


def test_collinear_design_is_non_invertible():
    with pytest.raises(NonInvertibleDesignError):
        fit_rbf([[0, 0], [1, 1], [2, 2], [3, 3]], [1, 2, 3, 4])


def test_mismatched_lengths_rejected():
    with pytest.raises(RbfFitError):
        fit_rbf([[0], [1], [2]], [1.0, 2.0])


@given(d=st.integers(1, 4), extra=st.integers(0, 8), seed=st.integers(0, 10_000),
       shift=st.lists(st.integers(-20, 20), min_size=4, max_size=4), c=st.floats(-100, 100))
def test_invariances(d, extra, seed, shift, c):
    rng = np.random.default_rng(seed)
    n = d + 1 + extra
    pts = random_design(rng, d, n)
    vals = rng.normal(size=n) * 10
    m = fit_rbf(pts, vals)
    # interpolation and orthogonality
    resid = np.max(np.abs(predict_rbf(m, pts) - vals))
    assert resid <= 1e-6 * max(1.0, np.max(np.abs(vals)))
    assert m.orthogonality_residual() <= 1e-8 * max(1.0, np.max(np.abs(m.lambdas)))
    q = rng.integers(-3, 13, size=(4, d))
    base = predict_rbf(m, q)
    # translation
    s = np.array(shift[:d])
    mt = fit_rbf(pts + s, vals)
    np.testing.assert_allclose(predict_rbf(mt, q + s), base, atol=1e-8 * max(1, np.abs(base).max()))
    # constant shift
    mc = fit_rbf(pts, vals + c)
    np.testing.assert_allclose(predict_rbf(mc, q), base + c, atol=1e-8 * max(1, np.abs(base).max(), abs(c)))
    np.testing.assert_allclose(mc.lambdas, m.lambdas, atol=1e-8 * max(1, np.abs(m.lambdas).max()))


def test_regularized_solve_shifts_the_kernel(monkeypatch, rng):
    import latticehpo.rbf as rbf_mod

    X = random_design(rng, 2, 8)
    y = rng.normal(size=8)
    plain = fit_rbf(X, y)
    monkeypatch.setattr(rbf_mod, "COND_LIMIT", 0.0)
    reg = fit_rbf(X, y)
    assert reg.regularized and not plain.regularized
    assert not np.array_equal(reg.lambdas, plain.lambdas)
    assert reg.orthogonality_residual() <= 1e-8
    np.testing.assert_allclose(predict_rbf(reg, X.astype(float)), y, atol=1e-6)
