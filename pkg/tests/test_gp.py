"""GP regression against dense linear-algebra oracles."""

import numpy as np
import pytest

from banditis.gp import (
    GPFitError,
    GPPrior,
    Hyperparameters,
    KernelSpec,
    MeanSpec,
    MleConfig,
    TrainingSet,
    fit,
    log_marginal_likelihood,
    mle_fit,
    profile_quadratic_mean,
)
from banditis.lowdisc import Domain


def dense_oracle(prior, training, query, jitter):
    """Mean, variance, and evidence by direct dense inversion."""
    gram = prior.kernel.matrix(training.inputs, training.inputs)
    gram += (training.noise_variance + jitter) * np.eye(training.size)
    inverse = np.linalg.inv(gram)
    residual = training.outputs - prior.mean.evaluate(training.inputs)
    cross = prior.kernel.matrix(training.inputs, np.atleast_2d(query))
    mean = prior.mean.evaluate(query) + cross.T @ inverse @ residual
    var = prior.kernel.variance - np.einsum("ij,ik,kj->j", cross, inverse, cross)
    evidence = (
        -0.5 * residual @ inverse @ residual
        - 0.5 * np.linalg.slogdet(gram)[1]
        - 0.5 * training.size * np.log(2 * np.pi)
    )
    return mean, var, evidence


class TestFit:
    def test_single_point_interpolation(self):
        training = TrainingSet(
            inputs=np.array([[0.3]]), outputs=np.array([2.0]), noise_variance=0.0
        )
        posterior = fit(GPPrior(MeanSpec(), KernelSpec(1.0, 1.0)), training)
        assert posterior.predict_mean(np.array([[0.3]]))[0] == pytest.approx(2.0)
        assert posterior.predict_var(np.array([[0.3]]))[0] == pytest.approx(
            0.0, abs=1e-6
        )

    def test_prior_reversion_far_from_data(self):
        training = TrainingSet(inputs=np.array([[0.0, 0.0]]), outputs=np.array([5.0]))
        coeffs = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
        prior = GPPrior(MeanSpec(coefficients=coeffs), KernelSpec(1.0, 2.0))
        posterior = fit(prior, training)
        far = np.array([[50.0, 50.0]])
        assert posterior.predict_mean(far)[0] == pytest.approx(1.0, abs=1e-8)
        assert posterior.predict_var(far)[0] == pytest.approx(2.0, rel=1e-6)

    def test_two_point_oracle(self):
        # Direct 2x2 solve of [[1, e^-.5], [e^-.5, 1]] against the kernel
        # vector at the midpoint.
        training = TrainingSet(
            inputs=np.array([[0.0], [1.0]]), outputs=np.array([0.0, 1.0])
        )
        posterior = fit(GPPrior(MeanSpec(), KernelSpec(1.0, 1.0)), training)
        gram = np.array([[1.0, np.exp(-0.5)], [np.exp(-0.5), 1.0]])
        gram += posterior.jitter * np.eye(2)
        vec = np.exp(-0.5 * 0.25) * np.ones(2)
        expected = vec @ np.linalg.solve(gram, np.array([0.0, 1.0]))
        assert posterior.predict_mean(np.array([[0.5]]))[0] == pytest.approx(
            expected, rel=1e-10
        )

    def test_training_point_prediction_noise_free(self):
        rng = np.random.default_rng(0)
        training = TrainingSet(inputs=rng.random((6, 2)), outputs=rng.normal(size=6))
        posterior = fit(GPPrior(MeanSpec(), KernelSpec(0.7, 1.3)), training)
        means = posterior.predict_mean(training.inputs)
        np.testing.assert_allclose(means, training.outputs, atol=1e-6, rtol=1e-6)
        assert np.all(posterior.predict_var(training.inputs) >= 0.0)

    def test_variance_bounded_by_prior(self):
        rng = np.random.default_rng(1)
        training = TrainingSet(inputs=rng.random((10, 2)), outputs=rng.normal(size=10))
        posterior = fit(GPPrior(MeanSpec(), KernelSpec(0.5, 2.5)), training)
        queries = rng.random((50, 2)) * 3 - 1
        variances = posterior.predict_var(queries)
        assert np.all(variances >= 0.0)
        assert np.all(variances <= 2.5 + 1e-8)

    def test_dense_oracle_equivalence(self):
        rng = np.random.default_rng(2)
        for n in (2, 5, 8):
            training = TrainingSet(
                inputs=rng.random((n, 2)),
                outputs=rng.normal(size=n),
                noise_variance=1e-4,
            )
            prior = GPPrior(MeanSpec(), KernelSpec(0.8, 1.5))
            posterior = fit(prior, training)
            query = rng.random((7, 2))
            mean, var, evidence = dense_oracle(
                prior, training, query, posterior.jitter
            )
            np.testing.assert_allclose(
                posterior.predict_mean(query), mean, rtol=1e-8, atol=1e-10
            )
            np.testing.assert_allclose(
                posterior.predict_var(query), np.maximum(var, 0), rtol=1e-8, atol=1e-8
            )
            np.testing.assert_allclose(
                log_marginal_likelihood(prior, training), evidence, rtol=1e-8
            )

    def test_shift_equivariance(self):
        # Variance never depends on outputs; the mean gains exactly +c at
        # training points, and everywhere once the GLS quadratic mean absorbs
        # the shift through its intercept.
        rng = np.random.default_rng(3)
        inputs = rng.random((12, 2))
        outputs = rng.normal(size=12)
        kernel = KernelSpec(0.6, 1.0)
        base_training = TrainingSet(inputs=inputs, outputs=outputs)
        shifted_training = TrainingSet(inputs=inputs, outputs=outputs + 4.5)
        queries = rng.random((20, 2))

        zero_prior = GPPrior(MeanSpec(), kernel)
        base = fit(zero_prior, base_training)
        shifted = fit(zero_prior, shifted_training)
        np.testing.assert_allclose(
            shifted.predict_var(queries), base.predict_var(queries), atol=1e-10
        )
        np.testing.assert_allclose(
            shifted.predict_mean(inputs),
            base.predict_mean(inputs) + 4.5,
            atol=1e-5,
        )

        base_mean = profile_quadratic_mean(kernel, base_training)
        shifted_mean = profile_quadratic_mean(kernel, shifted_training)
        base_q = fit(GPPrior(base_mean, kernel), base_training)
        shifted_q = fit(GPPrior(shifted_mean, kernel), shifted_training)
        np.testing.assert_allclose(
            shifted_q.predict_mean(queries),
            base_q.predict_mean(queries) + 4.5,
            atol=1e-8,
        )
        np.testing.assert_allclose(
            shifted_q.predict_var(queries), base_q.predict_var(queries), atol=1e-10
        )

    def test_duplicate_inputs_rejected(self):
        with pytest.raises(ValueError):
            TrainingSet(
                inputs=np.array([[0.1, 0.2], [0.1, 0.2]]), outputs=np.array([1.0, 2.0])
            )

    def test_pathological_kernel_raises_fit_error(self):
        # Immense lengthscale with many nearby points defeats every jitter
        # level only if jitter cannot rescue conditioning; here it can, so
        # assert the error path via an explicitly broken training matrix.
        training = TrainingSet(
            inputs=np.array([[0.0], [1e-9], [2e-9], [3e-9]]),
            outputs=np.array([0.0, 1.0, 2.0, 3.0]),
        )
        posterior = fit(GPPrior(MeanSpec(), KernelSpec(1e6, 1.0)), training)
        assert posterior.jitter >= 1e-8


class TestLogMarginalLikelihood:
    def test_standard_normal_evidence(self):
        training = TrainingSet(inputs=np.array([[0.0]]), outputs=np.array([0.0]))
        prior = GPPrior(MeanSpec(), KernelSpec(1.0, 1.0))
        assert log_marginal_likelihood(prior, training) == pytest.approx(
            -0.5 * np.log(2 * np.pi), abs=1e-7
        )

    def test_unit_observation_evidence(self):
        training = TrainingSet(inputs=np.array([[0.0]]), outputs=np.array([1.0]))
        prior = GPPrior(MeanSpec(), KernelSpec(1.0, 1.0))
        assert log_marginal_likelihood(prior, training) == pytest.approx(
            -0.5 - 0.5 * np.log(2 * np.pi), abs=1e-6
        )

    def test_three_point_dense_oracle(self):
        rng = np.random.default_rng(4)
        training = TrainingSet(
            inputs=rng.random((3, 1)), outputs=rng.normal(size=3), noise_variance=0.01
        )
        prior = GPPrior(MeanSpec(), KernelSpec(0.9, 1.1))
        posterior = fit(prior, training)
        _, _, evidence = dense_oracle(
            prior, training, training.inputs, posterior.jitter
        )
        assert log_marginal_likelihood(prior, training) == pytest.approx(
            evidence, rel=1e-8
        )


class TestQuadraticMean:
    def test_profile_recovers_exact_quadratic(self):
        rng = np.random.default_rng(5)
        inputs = rng.uniform(-2, 2, size=(25, 1))
        outputs = 2.0 - inputs[:, 0] + 0.5 * inputs[:, 0] ** 2
        training = TrainingSet(inputs=inputs, outputs=outputs)
        mean = profile_quadratic_mean(KernelSpec(1.0, 1.0), training)
        np.testing.assert_allclose(mean.coefficients, [2.0, -1.0, 0.5], atol=1e-5)

    def test_quadratic_mean_feature_layout(self):
        coeffs = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        mean = MeanSpec(coefficients=coeffs)
        point = np.array([[1.5, -0.5]])
        expected = 1.0 + 2.0 * 1.5 + 3.0 * -0.5 + 4.0 * 1.5**2 + 5.0 * 0.25
        assert mean.evaluate(point)[0] == pytest.approx(expected)


class TestMleFit:
    def _gp_draw(self, lengthscale, n, seed):
        rng = np.random.default_rng(seed)
        inputs = rng.uniform(-3, 3, size=(n, 1))
        kernel = KernelSpec(lengthscale, 1.0)
        gram = kernel.matrix(inputs, inputs) + 1e-10 * np.eye(n)
        outputs = np.linalg.cholesky(gram) @ rng.standard_normal(n)
        return TrainingSet(inputs=inputs, outputs=outputs, noise_variance=1e-6)

    def test_lengthscale_recovery(self):
        training = self._gp_draw(lengthscale=1.0, n=30, seed=6)
        config = MleConfig(
            lengthscale_log_bounds=(-3.0, 3.0), noise_variance=1e-6
        )
        hyper, posterior = mle_fit(training, "zero", config, seed=0)
        # Coarse grid-search oracle over log lengthscale, variance profiled
        # on a companion grid.
        grid = np.linspace(-3, 3, 25)
        scores = []
        for log_l in grid:
            best = -np.inf
            for log_v in np.linspace(-3, 3, 13):
                prior = GPPrior(
                    MeanSpec(), KernelSpec(np.exp(log_l), np.exp(log_v))
                )
                best = max(best, log_marginal_likelihood(prior, training))
            scores.append(best)
        oracle_log_l = grid[int(np.argmax(scores))]
        assert abs(hyper.log_lengthscale - 0.0) <= 0.7
        assert abs(oracle_log_l - 0.0) <= 0.7
        assert posterior.training.size == 30

    def test_constant_outputs_drive_variance_to_floor(self):
        rng = np.random.default_rng(7)
        training = TrainingSet(
            inputs=rng.random((10, 1)), outputs=np.zeros(10), noise_variance=1e-6
        )
        config = MleConfig(lengthscale_log_bounds=(-2.0, 2.0), noise_variance=1e-6)
        hyper, _ = mle_fit(training, "zero", config, seed=1)
        assert hyper.log_variance <= config.variance_log_bounds[0] + 0.5

    def test_returned_value_beats_every_start(self):
        training = self._gp_draw(lengthscale=0.5, n=20, seed=8)
        config = MleConfig(lengthscale_log_bounds=(-3.0, 3.0), noise_variance=1e-6)
        hyper, _ = mle_fit(training, "zero", config, seed=2)
        best_prior = GPPrior(hyper.mean(), hyper.kernel())
        best = log_marginal_likelihood(best_prior, training)
        bounds = [config.lengthscale_log_bounds, config.variance_log_bounds]
        rng = np.random.default_rng(2)
        starts = [np.array([0.0, 1.0])]
        starts[0] = np.array([0.5 * (lo + hi) for lo, hi in bounds])
        while len(starts) < config.restarts:
            starts.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))
        for start in starts:
            prior = GPPrior(
                MeanSpec(), KernelSpec(np.exp(start[0]), np.exp(start[1]))
            )
            assert best >= log_marginal_likelihood(prior, training) - 1e-6

    def test_deterministic_given_seed(self):
        training = self._gp_draw(lengthscale=1.0, n=15, seed=9)
        config = MleConfig(lengthscale_log_bounds=(-2.0, 2.0), noise_variance=1e-6)
        first, _ = mle_fit(training, "zero", config, seed=3)
        second, _ = mle_fit(training, "zero", config, seed=3)
        assert first.log_lengthscale == second.log_lengthscale
        assert first.log_variance == second.log_variance

    def test_noise_mle_mode(self):
        rng = np.random.default_rng(10)
        inputs = rng.uniform(-2, 2, size=(40, 1))
        outputs = np.sin(inputs[:, 0]) + 0.1 * rng.standard_normal(40)
        training = TrainingSet(inputs=inputs, outputs=outputs)
        config = MleConfig(
            lengthscale_log_bounds=(-2.0, 2.0),
            noise_mode="mle",
            noise_log_bounds=(-12.0, 2.0),
        )
        hyper, posterior = mle_fit(training, "zero", config, seed=4)
        assert hyper.log_noise_variance is not None
        # True noise variance 0.01; expect the right order of magnitude.
        assert -9.0 <= hyper.log_noise_variance <= -1.0
        assert posterior.training.noise_variance == pytest.approx(
            np.exp(hyper.log_noise_variance)
        )

    def test_quadratic_mean_coefficients_attached(self):
        rng = np.random.default_rng(11)
        inputs = rng.uniform(-2, 2, size=(25, 2))
        outputs = 1.0 + inputs[:, 0] - 0.3 * inputs[:, 1] ** 2
        outputs += 0.01 * rng.standard_normal(25)
        training = TrainingSet(inputs=inputs, outputs=outputs, noise_variance=1e-4)
        config = MleConfig(lengthscale_log_bounds=(-2.0, 3.0), noise_variance=1e-4)
        hyper, posterior = mle_fit(training, "quadratic", config, seed=5)
        assert hyper.mean_coefficients is not None
        assert hyper.mean_coefficients.size == 1 + 2 + 2

    def test_domain_derived_bounds(self):
        domain = Domain(lower=np.array([-16.0, -16.0]), upper=np.array([16.0, 16.0]))
        config = MleConfig.from_domain(domain)
        low, high = config.lengthscale_log_bounds
        assert low == pytest.approx(np.log(0.01 * domain.diameter))
        assert high == pytest.approx(np.log(2.0 * domain.diameter))
