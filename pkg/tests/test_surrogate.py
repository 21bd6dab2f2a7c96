import json

import numpy as np
import pytest

from mosbd.dominance import Bounds
from mosbd.problems import dtlz1_eval
from mosbd.surrogate import (
    KrigingModel,
    concentrated_nll,
    lhs_sample,
    optimize_theta,
)


def dense_ok(U, y, theta, u, nugget=1e-10):
    """Textbook ordinary kriging with explicit inverses (reference oracle)."""
    d = U[:, None, :] - U[None, :, :]
    R = np.exp(-np.sum(theta * d**2, axis=2)) + nugget * np.eye(len(U))
    r = np.exp(-np.sum(theta * (U - u) ** 2, axis=1))
    Ri = np.linalg.inv(R)
    one = np.ones(len(U))
    mu = one @ Ri @ y / (one @ Ri @ one)
    res = y - mu * one
    sigma2 = res @ Ri @ res / len(U)
    mean = mu + r @ Ri @ res
    mse = sigma2 * (1 - r @ Ri @ r + (1 - one @ Ri @ r) ** 2 / (one @ Ri @ one))
    return mean, max(mse, 0.0)


def dtlz_data(n, seed, K=3):
    rng = np.random.default_rng(seed)
    X = lhs_sample(n, Bounds.unit(K), rng)
    Y = np.array([dtlz1_eval(x, 2) for x in X])
    return X, Y


def fast_model(X, Y, bounds=None, **kw):
    kw.setdefault("n_starts", 2)
    kw.setdefault("evals_per_start", 30)
    kw.setdefault("rng", np.random.default_rng(0))
    return KrigingModel.fit(X, Y, bounds or Bounds.unit(X.shape[1]), **kw)


class TestLhs:
    def test_each_stratum_once(self):
        X = lhs_sample(30, Bounds.unit(3), np.random.default_rng(0))
        assert X.shape == (30, 3)
        for k in range(3):
            assert sorted(np.floor(X[:, k] * 30).astype(int)) == list(range(30))

    def test_two_points(self):
        X = lhs_sample(2, Bounds.unit(1), np.random.default_rng(4))
        lo, hi = sorted(X[:, 0])
        assert 0 <= lo < 0.5 <= hi <= 1

    def test_respects_bounds(self):
        b = Bounds([-2, 10], [2, 20])
        X = lhs_sample(50, b, np.random.default_rng(1))
        assert all(b.contains(x) for x in X)
        for k in range(2):
            strata = np.floor((X[:, k] - b.lower[k]) / b.span[k] * 50).astype(int)
            assert sorted(strata) == list(range(50))

    def test_deterministic(self):
        a = lhs_sample(10, Bounds.unit(4), np.random.default_rng(9))
        b = lhs_sample(10, Bounds.unit(4), np.random.default_rng(9))
        assert np.array_equal(a, b)

    def test_too_few(self):
        with pytest.raises(ValueError):
            lhs_sample(1, Bounds.unit(2), np.random.default_rng(0))


class TestFit:
    def test_single_point_rejected(self):
        with pytest.raises(ValueError):
            fast_model(np.array([[0.5]]), np.array([[1.0, 2.0]]))

    def test_two_points_interpolate(self):
        X = np.array([[0.2], [0.7]])
        Y = np.array([[1.0, -3.0], [2.0, 5.0]])
        m = fast_model(X, Y)
        for x, y in zip(X, Y):
            np.testing.assert_allclose(m.predict(x).phi, y, rtol=1e-6, atol=1e-6)

    def test_duplicate_inputs_rejected(self):
        X = np.array([[0.1, 0.2], [0.1, 0.2], [0.5, 0.5]])
        with pytest.raises(ValueError, match="duplicates"):
            fast_model(X, np.ones((3, 2)))

    def test_non_finite_rejected(self):
        X = np.array([[0.1], [0.5]])
        with pytest.raises(ValueError):
            fast_model(X, np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_dtlz1_interpolation(self):
        X, Y = dtlz_data(30, 0)
        m = KrigingModel.fit(X, Y, Bounds.unit(3), rng=np.random.default_rng(1))
        for x, y in zip(X, Y):
            rec = m.predict(x)
            assert np.all(np.abs(rec.phi - y) <= 1e-6 * (1 + np.abs(y)))
            _, mse = m.predict_normalized(x)
            assert np.all(np.sqrt(mse) <= 1e-4)

    def test_constant_response(self):
        rng = np.random.default_rng(2)
        X = rng.random((5, 2))
        Y = np.full((5, 2), 3.5)
        m = fast_model(X, Y)
        for x in rng.random((20, 2)):
            np.testing.assert_allclose(m.predict(x).phi, 3.5, rtol=1e-6)
        for obj in m._objectives:
            assert obj.sigma2 == pytest.approx(0.0, abs=1e-12)


class TestPredict:
    def test_matches_dense_oracle(self):
        X, Y = dtlz_data(25, 3)
        m = fast_model(X, Y)
        Ys = (Y - m.y_mean) / m.y_scale
        rng = np.random.default_rng(0)
        for u in rng.random((20, 3)):
            mean, mse = m.predict_normalized(u)
            for q in range(2):
                ref_mean, ref_mse = dense_ok(X, Ys[:, q], m.thetas[q], u)
                assert mean[q] == pytest.approx(ref_mean, rel=1e-6, abs=1e-8)
                assert mse[q] == pytest.approx(ref_mse, rel=1e-5, abs=1e-9)

    def test_symmetric_pair_gives_mean(self):
        X = np.array([[0.2, 0.3], [0.8, 0.7]])
        Y = np.array([[1.0, 10.0], [3.0, -4.0]])
        m = fast_model(X, Y)
        m.refresh(thetas=np.full((2, 2), 2.0), restandardize=False)
        np.testing.assert_allclose(m.predict([0.5, 0.5]).phi, [2.0, 3.0], rtol=1e-9)

    def test_delta_grows_far_from_data(self):
        X = np.array([[0.0], [0.05], [0.1]])
        Y = np.column_stack([np.sin(X[:, 0]), np.cos(X[:, 0])])
        m = fast_model(X, Y)
        m.refresh(thetas=np.full((2, 1), 100.0), restandardize=False)
        # correlation length 1/sqrt(100) = 0.1; x=1.0 is 9 lengths from the data
        near = m.predict([0.1]).delta
        far = m.predict([1.0]).delta
        assert np.all(far >= near)

    def test_delta_non_negative_and_continuous(self):
        X, Y = dtlz_data(20, 5)
        m = fast_model(X, Y)
        grid = np.linspace(0, 1, 201)
        deltas = np.array([m.predict([t, 0.4, 0.6]).delta for t in grid])
        assert np.all(deltas >= 0)
        jumps = np.abs(np.diff(deltas, axis=0))
        assert jumps.max() < 0.2 * (deltas.max() + 1e-12)

    def test_affine_input_rescaling_invariance(self):
        X, Y = dtlz_data(20, 6)
        m1 = fast_model(X, Y, Bounds.unit(3), rng=np.random.default_rng(3))
        b10 = Bounds(np.zeros(3), np.full(3, 10.0))
        m2 = fast_model(10 * X, Y, b10, rng=np.random.default_rng(3))
        for u in np.random.default_rng(1).random((10, 3)):
            a, sa = m1.predict_normalized(u)
            b, sb = m2.predict_normalized(10 * u)
            np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)
            np.testing.assert_allclose(sa, sb, rtol=1e-9, atol=1e-12)

    def test_more_data_lowers_rmse(self):
        ratios = []
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            test_x = rng.random((200, 3))
            test_y = np.array([dtlz1_eval(x, 2) for x in test_x])

            def rmse(n):
                X, Y = dtlz_data(n, seed)
                m = KrigingModel.fit(X, Y, Bounds.unit(3), rng=np.random.default_rng(seed))
                P = np.array([m.predict(x).phi for x in test_x])
                return np.sqrt(np.mean((P - test_y) ** 2))

            ratios.append(rmse(300) / rmse(30))
        assert np.median(ratios) < 1.0


class TestReinforce:
    def test_interpolates_new_point(self):
        X, Y = dtlz_data(20, 7)
        m = fast_model(X, Y)
        x = np.array([0.33, 0.44, 0.55])
        y = dtlz1_eval(x, 2)
        assert m.reinforce(x, y)
        assert m.n_train == 21
        np.testing.assert_allclose(m.predict(x).phi, y, rtol=1e-6)

    def test_extension_matches_full_refactorization(self):
        X, Y = dtlz_data(15, 8)
        m = fast_model(X, Y, refresh_every=1000)
        rng = np.random.default_rng(2)
        for x in rng.random((30, 3)):
            m.reinforce(x, dtlz1_eval(x, 2))
        ref = KrigingModel(Bounds.unit(3), 2)
        ref._set_data(m._X[: m.n_train].copy(), m.Y_train)
        ref.y_mean, ref.y_scale = m.y_mean, m.y_scale
        ref.refresh(thetas=m.thetas, restandardize=False)
        for u in rng.random((10, 3)):
            a, sa = m.predict_normalized(u)
            b, sb = ref.predict_normalized(u)
            np.testing.assert_allclose(a, b, rtol=1e-7, atol=1e-8)
            np.testing.assert_allclose(sa, sb, rtol=1e-5, atol=1e-10)

    def test_duplicate_is_noop(self):
        X, Y = dtlz_data(10, 9)
        m = fast_model(X, Y)
        assert not m.reinforce(X[3], Y[3])
        x = np.array([0.5, 0.5, 0.5])
        assert m.reinforce(x, dtlz1_eval(x, 2))
        assert not m.reinforce(x, dtlz1_eval(x, 2))
        assert m.n_train == 11

    def test_refresh_boundary(self):
        X, Y = dtlz_data(10, 10)
        m = fast_model(X, Y, refresh_every=5)
        before = m.n_refreshes
        rng = np.random.default_rng(0)
        for x in rng.random((5, 3)):
            m.reinforce(x, dtlz1_eval(x, 2))
        assert m.n_refreshes == before + 1
        assert m.since_refresh == 0

    def test_grows_to_thousands_of_points(self):
        X, Y = dtlz_data(30, 11)
        m = fast_model(X, Y, refresh_every=300)
        rng = np.random.default_rng(1)
        added = 0
        while added < 2985:
            x = rng.random(3)
            added += m.reinforce(x, dtlz1_eval(x, 2))
        assert m.n_train == 3015
        for x, y in zip(m.X_train[::50], m.Y_train[::50]):
            np.testing.assert_allclose(m.predict(x).phi, y, rtol=1e-6, atol=1e-6)

    def test_rejects_bad_response(self):
        X, Y = dtlz_data(10, 12)
        m = fast_model(X, Y)
        with pytest.raises(ValueError):
            m.reinforce([0.1, 0.2, 0.3], [np.inf, 0.0])


class TestLikelihood:
    def test_nll_matches_dense(self):
        X, Y = dtlz_data(15, 13)
        y = (Y[:, 0] - Y[:, 0].mean()) / Y[:, 0].std()
        lt = np.array([0.5, -0.3, 1.0])
        theta = 10.0**lt
        d = X[:, None, :] - X[None, :, :]
        R = np.exp(-np.sum(theta * d**2, axis=2)) + 1e-10 * np.eye(15)
        Ri = np.linalg.inv(R)
        one = np.ones(15)
        mu = one @ Ri @ y / (one @ Ri @ one)
        s2 = (y - mu) @ Ri @ (y - mu) / 15
        ref = 7.5 * np.log(s2) + 0.5 * np.linalg.slogdet(R)[1]
        assert concentrated_nll(X, y, lt) == pytest.approx(ref, rel=1e-8)

    def test_optimizer_improves_on_starts(self):
        X, Y = dtlz_data(30, 14)
        y = (Y[:, 0] - Y[:, 0].mean()) / Y[:, 0].std()
        theta = optimize_theta(X, y, np.random.default_rng(0))
        best = concentrated_nll(X, y, np.log10(theta))
        rng = np.random.default_rng(1)
        probes = [concentrated_nll(X, y, rng.uniform(-3, 3, 3)) for _ in range(20)]
        assert best <= min(probes)
        assert np.all((theta >= 1e-3) & (theta <= 1e3))

    def test_deterministic(self):
        X, Y = dtlz_data(20, 15)
        a = fast_model(X, Y, rng=np.random.default_rng(5)).thetas
        b = fast_model(X, Y, rng=np.random.default_rng(5)).thetas
        assert np.array_equal(a, b)


def test_near_duplicates_stay_factorizable():
    X = np.array([[0.5, 0.5], [0.5, 0.5 + 1e-9], [0.1, 0.9], [0.9, 0.1]])
    Y = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 2.0], [2.0, 0.0]])
    m = fast_model(X, Y)
    m.refresh(thetas=np.full((2, 2), 1000.0), restandardize=False)
    assert np.all(np.isfinite(m.predict([0.3, 0.3]).phi))


def test_json_roundtrip():
    X, Y = dtlz_data(20, 16)
    m = fast_model(X, Y, refresh_every=7)
    for x in np.random.default_rng(0).random((3, 3)):
        m.reinforce(x, dtlz1_eval(x, 2))
    text = m.to_json()
    json.loads(text)
    m2 = KrigingModel.from_json(text)
    assert m2.n_train == m.n_train
    assert np.array_equal(m2.thetas, m.thetas)
    assert np.array_equal(m2.X_train, m.X_train)
    assert np.array_equal(m2.Y_train, m.Y_train)
    # the reload refactorizes; the original was grown by rank-one steps
    for u in np.random.default_rng(1).random((5, 3)):
        a, b = m.predict(u), m2.predict(u)
        np.testing.assert_allclose(a.phi, b.phi, rtol=1e-9)
        np.testing.assert_allclose(a.delta, b.delta, rtol=1e-6)
