"""GPR posterior against independent dense-solve oracles, LML checks,
hyperparameter search behavior, and cross-validation."""

import math

import numpy as np
import pytest

from beadlab.errors import IllConditionedError, ValidationError
from beadlab.gpr import (
    GridSpec,
    KernelParams,
    _cholesky_with_jitter,
    cross_validate,
    fit,
    log_marginal_likelihood,
    optimize_hyperparameters,
    predict,
    predict_batch,
    rbf_kernel,
)


def dense_posterior(x, y, params, queries, jitter=0.0):
    """Independent oracle: explicit kernel loops + plain linear solves.

    Standardizes with numpy primitives and inverts the regularized Gram
    matrix by Gaussian elimination (np.linalg.solve), never touching the
    package's Cholesky path.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mu, sd = x.mean(axis=0), x.std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    xs = (x - mu) / sd
    qs = (np.asarray(queries, dtype=float) - mu) / sd
    yc = y - y.mean()
    n = len(xs)

    def k(a, b):
        return params.signal_variance * math.exp(
            -float(((a - b) ** 2).sum()) / (2.0 * params.length_scale**2)
        )

    big_k = np.array([[k(xs[i], xs[j]) for j in range(n)] for i in range(n)])
    reg = big_k + (params.noise_variance + jitter) * np.eye(n)
    alpha = np.linalg.solve(reg, yc)
    means, variances = [], []
    for q in qs:
        k_star = np.array([k(q, xs[j]) for j in range(n)])
        means.append(float(k_star @ alpha + y.mean()))
        variances.append(
            max(float(params.signal_variance - k_star @ np.linalg.solve(reg, k_star)), 0.0)
        )
    return np.array(means), np.array(variances)


def random_instance(rng, n=None, d=None):
    n = n or int(rng.integers(3, 11))
    d = d or int(rng.integers(1, 4))
    x = rng.uniform(0, 10, (n, d))
    y = rng.normal(0, 2, n)
    params = KernelParams(
        length_scale=float(rng.uniform(0.5, 3.0)),
        signal_variance=float(rng.uniform(0.5, 4.0)),
        noise_variance=float(rng.uniform(1e-3, 1e-1)),
    )
    return x, y, params


class TestKernel:
    def test_zero_distance(self):
        p = KernelParams(0.7, 1.0, 0.0)
        assert rbf_kernel([1.0, 2.0], [1.0, 2.0], p) == 1.0

    def test_frozen_scalar_value(self):
        p = KernelParams(1.0, 1.0, 0.0)
        assert math.isclose(rbf_kernel([0.0], [1.0], p), 0.6065306597126334)

    def test_decay(self):
        p = KernelParams(1.0, 1.0, 0.0)
        assert rbf_kernel([0.0], [1000.0], p) < 1e-300

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            rbf_kernel([0.0], [0.0, 1.0], KernelParams(1.0, 1.0, 0.0))


class TestFit:
    def test_single_point_posterior(self):
        params = KernelParams(1.0, 2.0, 1e-6)
        model = fit([[3.0]], [7.5], params)
        mean, std = predict(model, [3.0])
        assert math.isclose(mean, 7.5, abs_tol=1e-9)
        assert std**2 <= params.noise_variance + 1e-12

    def test_alpha_matches_dense_solve(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.uniform(0, 10, (10, 1))
            y = rng.normal(0, 1, 10)
            params = KernelParams(1.5, 1.0, 1e-2)
            model = fit(x, y, params)
            mu, sd = x.mean(axis=0), x.std(axis=0)
            xs = (x - mu) / sd
            big_k = np.array(
                [
                    [
                        params.signal_variance
                        * math.exp(-float(((xs[i] - xs[j]) ** 2).sum()) / (2 * 1.5**2))
                        for j in range(10)
                    ]
                    for i in range(10)
                ]
            )
            alpha = np.linalg.solve(
                big_k + params.noise_variance * np.eye(10), y - y.mean()
            )
            assert np.allclose(model.alpha, alpha, rtol=1e-8, atol=1e-10)

    def test_duplicate_rows_need_noise(self):
        x = [[1.0], [1.0], [2.0]]
        with pytest.raises(ValidationError):
            fit(x, [0.0, 1.0, 2.0], KernelParams(1.0, 1.0, 0.0))
        model = fit(x, [0.0, 1.0, 2.0], KernelParams(1.0, 1.0, 1e-4))
        assert model.jitter_used <= 1e-4

    def test_constant_feature_rejected(self):
        x = [[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]
        with pytest.raises(ValidationError):
            fit(x, [1.0, 2.0, 3.0], KernelParams(1.0, 1.0, 1e-3))

    def test_cholesky_reconstructs_regularized_gram(self):
        rng = np.random.default_rng(2)
        x, y, params = random_instance(rng, n=8, d=2)
        model = fit(x, y, params)
        xs = model.x_train
        n = len(xs)
        k_reg = np.array(
            [
                [
                    rbf_kernel(xs[i], xs[j], params)
                    for j in range(n)
                ]
                for i in range(n)
            ]
        ) + (params.noise_variance + model.jitter_used) * np.eye(n)
        assert np.allclose(model.chol @ model.chol.T, k_reg, rtol=1e-8)

    def test_ill_conditioned_matrix_raises(self):
        with pytest.raises(IllConditionedError):
            _cholesky_with_jitter(np.array([[-1.0]]))


class TestPredict:
    def test_near_interpolation_at_training_points(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(2, 9))
            x = rng.uniform(0, 10, (n, 2))
            while len(x) > 1 and np.min(
                np.linalg.norm(x[:, None] - x[None, :], axis=-1)
                + np.eye(n) * 1e9
            ) < 0.3:
                x = rng.uniform(0, 10, (n, 2))
            y = rng.normal(0, 1, n)
            model = fit(x, y, KernelParams(1.0, 1.0, 1e-8))
            for i in range(n):
                mean, std = predict(model, x[i])
                assert abs(mean - y[i]) < 1e-4
                assert std < 1e-3

    def test_prior_reversion_far_from_data(self):
        params = KernelParams(1.0, 2.25, 1e-4)
        x = [[0.0], [1.0], [2.0]]
        y = [5.0, 6.0, 7.0]
        model = fit(x, y, params)
        mean, std = predict(model, [1000.0])
        assert math.isclose(mean, 6.0, abs_tol=1e-9)
        assert math.isclose(std, 1.5, abs_tol=1e-9)

    def test_two_point_closed_form(self):
        # Hand-inverted 2x2: K = [[a, b], [b, a]], inv = [[a,-b],[-b,a]]/(a^2-b^2)
        params = KernelParams(1.0, 1.0, 0.01)
        x = np.array([[0.0], [2.0]])
        y = np.array([1.0, -1.0])
        model = fit(x, y, params)
        xs = ((x - x.mean()) / x.std()).ravel()
        b = math.exp(-((xs[0] - xs[1]) ** 2) / 2.0)
        a = 1.0 + params.noise_variance
        det = a * a - b * b
        q = (0.7 - x.mean()) / x.std()
        k1 = math.exp(-((q - xs[0]) ** 2) / 2.0)
        k2 = math.exp(-((q - xs[1]) ** 2) / 2.0)
        yc = y - y.mean()
        alpha1 = (a * yc[0] - b * yc[1]) / det
        alpha2 = (-b * yc[0] + a * yc[1]) / det
        want_mean = k1 * alpha1 + k2 * alpha2 + y.mean()
        quad = (a * k1 * k1 - 2 * b * k1 * k2 + a * k2 * k2) / det
        want_var = 1.0 - quad
        mean, std = predict(model, [0.7])
        assert math.isclose(mean, want_mean, rel_tol=1e-10)
        assert math.isclose(std**2, want_var, rel_tol=1e-8)

    def test_dimension_mismatch(self):
        model = fit([[0.0, 1.0], [1.0, 0.0]], [0.0, 1.0], KernelParams(1.0, 1.0, 1e-3))
        with pytest.raises(ValidationError):
            predict(model, [0.0])

    def test_variance_bounded_by_signal_variance(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            x, y, params = random_instance(rng)
            model = fit(x, y, params)
            queries = rng.uniform(-5, 15, (20, x.shape[1]))
            _, stds = predict_batch(model, queries)
            assert np.all(stds >= 0.0)
            assert np.all(stds**2 <= params.signal_variance + 1e-12)

    def test_affine_input_rescaling_is_invariant(self):
        rng = np.random.default_rng(5)
        x, y, params = random_instance(rng, n=9, d=2)
        queries = rng.uniform(0, 10, (6, 2))
        scale = np.array([3.7, 0.02])
        shift = np.array([-120.0, 4.5])
        base_mean, base_std = predict_batch(fit(x, y, params), queries)
        scaled_mean, scaled_std = predict_batch(
            fit(x * scale + shift, y, params), queries * scale + shift
        )
        assert np.allclose(base_mean, scaled_mean, atol=1e-9)
        assert np.allclose(base_std, scaled_std, atol=1e-9)


class TestLogMarginalLikelihood:
    def test_single_point_closed_form(self):
        params = KernelParams(1.0, 2.0, 0.5)
        got = log_marginal_likelihood([[4.0]], [3.0], params)
        want = -0.5 * math.log(2.5) - 0.5 * math.log(2 * math.pi)
        assert math.isclose(got, want, rel_tol=1e-12)

    def test_matches_dense_determinant_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            x, y, params = random_instance(rng, n=int(rng.integers(2, 9)))
            got = log_marginal_likelihood(x, y, params)
            mu, sd = x.mean(axis=0), x.std(axis=0)
            xs = (x - mu) / sd
            n = len(xs)
            big_k = np.array(
                [
                    [rbf_kernel(xs[i], xs[j], params) for j in range(n)]
                    for i in range(n)
                ]
            ) + params.noise_variance * np.eye(n)
            yc = y - y.mean()
            sign, logdet = np.linalg.slogdet(big_k)
            assert sign > 0
            want = (
                -0.5 * yc @ np.linalg.solve(big_k, yc)
                - 0.5 * logdet
                - 0.5 * n * math.log(2 * math.pi)
            )
            assert math.isclose(got, want, rel_tol=1e-8)

    def test_noise_sweep_is_unimodal_near_data_noise(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0, 10, (30, 1))
        y = rng.normal(0, 1.0, 30)
        grid = np.logspace(-3, 2, 21)
        values = [
            log_marginal_likelihood(x, y, KernelParams(1.0, 1.0, s)) for s in grid
        ]
        k = int(np.argmax(values))
        assert 0.05 <= grid[k] <= 3.0
        assert all(b > a for a, b in zip(values[:k], values[1 : k + 1]))
        assert all(b < a for a, b in zip(values[k:], values[k + 1 :]))


class TestOptimize:
    def test_returned_lml_beats_every_grid_point(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 10, (12, 1))
        y = np.sin(x[:, 0]) + rng.normal(0, 0.1, 12)
        params, report = optimize_hyperparameters(x, y)
        grid = GridSpec()
        for ell in grid.axes()[0]:
            for sf2 in grid.axes()[1]:
                for sn2 in grid.axes()[2]:
                    try:
                        value = log_marginal_likelihood(
                            x, y, KernelParams(ell, sf2, sn2)
                        )
                    except IllConditionedError:
                        continue
                    assert report.log_marginal_likelihood >= value - 1e-9

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(0, 10, (10, 2))
        y = rng.normal(0, 1, 10)
        a = optimize_hyperparameters(x, y)
        b = optimize_hyperparameters(x, y)
        assert a == b

    def test_needs_three_points(self):
        with pytest.raises(ValidationError):
            optimize_hyperparameters([[0.0], [1.0]], [0.0, 1.0])

    def test_perturbations_from_optimum_reduce_lml(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(0, 10, (25, 1))
        true = KernelParams(1.5, 2.0, 0.05)
        xs = (x - x.mean()) / x.std()
        cov = np.array(
            [[rbf_kernel(xs[i], xs[j], true) for j in range(25)] for i in range(25)]
        ) + true.noise_variance * np.eye(25)
        y = np.linalg.cholesky(cov) @ rng.standard_normal(25)
        params, report = optimize_hyperparameters(x, y)
        drops = 0
        for _ in range(100):
            direction = rng.standard_normal(3)
            direction /= np.linalg.norm(direction)
            factors = 10.0**direction
            try:
                perturbed = KernelParams(
                    params.length_scale * factors[0],
                    params.signal_variance * factors[1],
                    params.noise_variance * factors[2],
                )
                value = log_marginal_likelihood(x, y, perturbed)
            except (ValidationError, IllConditionedError):
                drops += 1
                continue
            if value < report.log_marginal_likelihood:
                drops += 1
        assert drops >= 95


class TestCrossValidate:
    def test_truth_in_model_class_noiseless(self):
        x = np.arange(10, dtype=float).reshape(-1, 1)
        y = np.full(10, 3.25)
        score = cross_validate(x, y, KernelParams(1.0, 1.0, 1e-8), folds=5, seed=0)
        assert score < 1e-6

    def test_loo_matches_explicit_refits(self):
        rng = np.random.default_rng(10)
        x = rng.uniform(0, 10, (8, 1))
        y = rng.normal(0, 1, 8)
        params = KernelParams(1.2, 1.0, 1e-2)
        got = cross_validate(x, y, params, folds=8, seed=3)
        errs = []
        for i in range(8):
            rest = [j for j in range(8) if j != i]
            model = fit(x[rest], y[rest], params)
            mean, _ = predict(model, x[i])
            errs.append(abs(mean - y[i]))
        assert math.isclose(got, float(np.mean(errs)), rel_tol=1e-10)

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0, 10, (15, 2))
        y = rng.normal(0, 1, 15)
        params = KernelParams(1.0, 1.0, 1e-2)
        assert cross_validate(x, y, params, seed=5) == cross_validate(
            x, y, params, seed=5
        )

    def test_too_few_points(self):
        with pytest.raises(ValidationError):
            cross_validate([[0.0], [1.0]], [0.0, 1.0], KernelParams(1.0, 1.0, 0.01), folds=5)
