"""Quantile, inversion, and density checks for the g-and-k model.

Oracles: scipy's inverse normal CDF for the quantile kernel, central finite
differences for the analytic derivative, and trapezoid quadrature for the
density normalization.
"""

import numpy as np
import pytest
from scipy import special

from banditis.targets import (
    GandKParams,
    GandKPosterior,
    gk_inverse_quantile,
    gk_log_density,
    gk_quantile,
    gk_quantile_deriv,
    gk_sample,
    normal_quantile,
)
from banditis.targets.gandk import (
    LOG_DENSITY_SENTINEL,
    _invert_z_batch,
    gk_log_density_batch,
)

THETA_TRUE = np.array([3.0, 1.0, 2.0, 0.5])
GAUSSIAN_CASE = GandKParams(theta=np.array([0.0, 1.0, 0.0, 0.0]))

PARAM_GRID = [
    GandKParams(theta=THETA_TRUE),
    GAUSSIAN_CASE,
    GandKParams(theta=np.array([3.0, 2.0, 1.0, 1.0])),
    GandKParams(theta=np.array([1.0, 0.5, 4.0, 0.3])),
    GandKParams(theta=np.array([5.0, 3.0, 0.5, 0.0])),
]

U_GRID = np.array([1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0 - 1e-4])


class TestNormalQuantile:
    def test_against_scipy(self):
        u = np.array([1e-10, 1e-5, 0.02, 0.3, 0.5, 0.7, 0.975, 1 - 1e-5, 1 - 1e-10])
        ours = normal_quantile(u)
        reference = special.ndtri(u)
        np.testing.assert_allclose(ours, reference, rtol=1e-9, atol=1e-9)

    def test_cdf_roundtrip(self):
        u = np.linspace(1e-6, 1.0 - 1e-6, 1001)
        z = normal_quantile(u)
        back = 0.5 * special.erfc(-z / np.sqrt(2.0))
        assert np.max(np.abs(back - u)) < 1e-9

    def test_scalar_and_median(self):
        assert normal_quantile(0.5) == 0.0
        assert isinstance(normal_quantile(0.3), float)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.1])
    def test_rejects_boundary(self, bad):
        with pytest.raises(ValueError):
            normal_quantile(bad)


class TestQuantile:
    def test_pure_location_scale(self):
        params = GandKParams(theta=np.array([3.0, 1.0, 0.0, 0.0]))
        assert gk_quantile(0.5, params) == pytest.approx(3.0, abs=1e-12)
        assert gk_quantile(0.975, params) == pytest.approx(
            3.0 + special.ndtri(0.975), abs=1e-9
        )

    def test_median_is_location(self):
        # z(0.5) = 0 kills every non-location term.
        assert gk_quantile(0.5, GandKParams(theta=THETA_TRUE)) == pytest.approx(
            3.0, abs=1e-12
        )

    def test_strictly_increasing_on_grid(self):
        u = np.linspace(0.001, 0.999, 500)
        for params in PARAM_GRID:
            assert np.all(np.diff(gk_quantile(u, params)) > 0.0)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError, match="scale"):
            GandKParams(theta=np.array([0.0, 0.0, 0.0, 0.0]))

    def test_rejects_nonmonotone_parameters(self):
        # Strongly negative kurtosis bends Q(z) = z (1+z^2)^t4 back down.
        with pytest.raises(ValueError, match="increasing"):
            GandKParams(theta=np.array([0.0, 1.0, 0.0, -1.0]))


class TestQuantileDerivative:
    def test_gaussian_case_at_median(self):
        assert gk_quantile_deriv(0.5, GAUSSIAN_CASE) == pytest.approx(
            np.sqrt(2.0 * np.pi), rel=1e-12
        )

    def test_matches_finite_differences(self):
        params = GandKParams(theta=THETA_TRUE)
        step = 1e-6
        for u in [0.1, 0.3, 0.5, 0.8, 0.95]:
            oracle = (gk_quantile(u + step, params) - gk_quantile(u - step, params)) / (
                2.0 * step
            )
            assert gk_quantile_deriv(u, params) == pytest.approx(oracle, rel=1e-5)

    def test_positive_across_grid(self):
        u = np.linspace(0.001, 0.999, 300)
        for params in PARAM_GRID:
            assert np.all(gk_quantile_deriv(u, params) > 0.0)

    def test_raises_on_nonpositive(self):
        # Bypass construction validation to exercise the runtime guard.
        params = GandKParams(theta=np.array([0.0, 1.0, 0.0, 0.0]))
        object.__setattr__(params, "theta", np.array([0.0, 1.0, 0.0, -1.0]))
        with pytest.raises(ValueError, match="nonpositive"):
            gk_quantile_deriv(0.95, params)


class TestInverse:
    @pytest.mark.parametrize("params", PARAM_GRID, ids=lambda p: str(p.theta))
    def test_roundtrip(self, params):
        for u in U_GRID:
            x = gk_quantile(u, params)
            u_back = gk_inverse_quantile(x, params)
            assert abs(u_back - u) < 1e-8
            assert abs(gk_quantile(u_back, params) - x) <= 1e-10 * (1.0 + abs(x))

    def test_gaussian_case_zero(self):
        u, clamped = gk_inverse_quantile(0.0, GAUSSIAN_CASE, return_flag=True)
        assert u == pytest.approx(0.5, abs=1e-10)
        assert not clamped

    def test_clamps_outside_bracket(self):
        params = GandKParams(theta=THETA_TRUE)
        low_x = gk_quantile(1e-12, params) - 10.0
        high_x = gk_quantile(1.0 - 1e-12, params) + 10.0
        u_low, flag_low = gk_inverse_quantile(low_x, params, return_flag=True)
        u_high, flag_high = gk_inverse_quantile(high_x, params, return_flag=True)
        assert flag_low and flag_high
        assert u_low == pytest.approx(1e-12)
        assert u_high == pytest.approx(1.0 - 1e-12)

    def test_batch_is_bitwise_identical_to_scalar(self):
        # Converged entries freeze, so batching cannot perturb trajectories.
        params = GandKParams(theta=THETA_TRUE)
        rng = np.random.default_rng(5)
        xs = np.concatenate(
            [
                gk_quantile(rng.random(50) * 0.998 + 0.001, params),
                [gk_quantile(1e-12, params) - 5.0, gk_quantile(1 - 1e-12, params) + 5.0],
            ]
        )
        batch_z, batch_flags = _invert_z_batch(xs, params)
        for x, z, flag in zip(xs, batch_z, batch_flags):
            scalar_z, scalar_flag = _invert_z_batch(np.array([x]), params)
            assert z == scalar_z[0]
            assert flag == scalar_flag[0]

    def test_deep_tail_data_still_invert(self):
        # Data near the far edge of a lighter-tailed parameter's bracket used
        # to stall a u-space Newton; the z-space solve handles them.
        params = GandKParams(theta=np.array([1.0, 0.5, 4.0, 0.2]))
        edge = gk_quantile(1.0 - 1e-12, params)
        for x in [edge - 1e-6, edge - 1e-3, edge - 1.0]:
            z, clamped = _invert_z_batch(np.array([x]), params)
            assert not clamped[0]
            assert np.isfinite(gk_log_density(x, params))


class TestDensity:
    def test_gaussian_case_at_zero(self):
        assert gk_log_density(0.0, GAUSSIAN_CASE) == pytest.approx(
            -0.5 * np.log(2.0 * np.pi), abs=1e-10
        )

    def test_reciprocal_slope_identity(self):
        params = GandKParams(theta=THETA_TRUE)
        x = gk_quantile(0.9, params)
        density = np.exp(gk_log_density(x, params))
        assert density == pytest.approx(
            1.0 / gk_quantile_deriv(0.9, params), rel=1e-9
        )

    @pytest.mark.parametrize(
        "params",
        [GandKParams(theta=THETA_TRUE), GAUSSIAN_CASE],
        ids=["skew-kurtotic", "gaussian"],
    )
    def test_integrates_to_one(self, params):
        support = gk_quantile(np.array([1e-6, 1.0 - 1e-6]), params)
        xs = np.linspace(support[0], support[1], 10_000)
        densities = np.exp(gk_log_density_batch(xs, params))
        assert np.trapezoid(densities, xs) == pytest.approx(1.0, abs=1e-3)

    def test_batch_matches_scalar(self):
        params = GandKParams(theta=THETA_TRUE)
        xs = gk_quantile(np.linspace(0.02, 0.98, 25), params)
        batch = gk_log_density_batch(xs, params)
        scalar = np.array([gk_log_density(x, params) for x in xs])
        np.testing.assert_array_equal(batch, scalar)


class TestSampling:
    def test_gaussian_case_moments(self):
        draws = gk_sample(GAUSSIAN_CASE, size=4000, seed=7)
        assert abs(draws.mean()) < 0.07
        assert 0.93 < draws.std() < 1.07

    def test_median_near_location(self):
        draws = gk_sample(GandKParams(theta=THETA_TRUE), size=4000, seed=11)
        assert abs(np.median(draws) - 3.0) < 0.1

    def test_seed_determinism(self):
        params = GandKParams(theta=THETA_TRUE)
        np.testing.assert_array_equal(
            gk_sample(params, 64, seed=3), gk_sample(params, 64, seed=3)
        )


class TestPosterior:
    def test_empty_dataset(self):
        posterior = GandKPosterior(dataset=np.array([]))
        assert posterior.log_q(np.array([1.0, 1.0, 1.0, 1.0])) == 0.0

    def test_single_normal_datum(self):
        posterior = GandKPosterior(dataset=np.array([0.0]))
        value = posterior.log_q(np.array([0.0, 1.0, 0.0, 0.0]))
        assert value == pytest.approx(-0.91894, abs=1e-5)

    def test_two_data_sum(self):
        posterior = GandKPosterior(dataset=np.array([0.0, 1.0]))
        value = posterior.log_q(np.array([0.0, 1.0, 0.0, 0.0]))
        assert value == pytest.approx(-np.log(2.0 * np.pi) - 0.5, abs=1e-9)

    def test_one_count_per_call_regardless_of_n(self):
        posterior = GandKPosterior(dataset=gk_sample(GAUSSIAN_CASE, 200, seed=1))
        theta = np.array([0.5, 1.0, 0.5, 0.5])
        for expected in (1, 2, 3):
            posterior.log_q(theta)
            assert posterior.eval_count == expected

    def test_invalid_parameters_get_sentinel(self):
        posterior = GandKPosterior(dataset=np.array([1.0, 2.0]))
        with pytest.warns(RuntimeWarning, match="failed"):
            value = posterior.log_q(np.array([1.0, 0.0, 1.0, 1.0]))
        assert value == LOG_DENSITY_SENTINEL

    def test_peaks_near_generating_parameters(self):
        params = GandKParams(theta=THETA_TRUE)
        posterior = GandKPosterior(dataset=gk_sample(params, 500, seed=23))
        at_truth = posterior.log_q(THETA_TRUE)
        for other in ([5.0, 2.0, 1.0, 1.0], [1.0, 0.5, 4.0, 0.2], [3.0, 1.0, 2.0, 2.0]):
            assert at_truth > posterior.log_q(np.array(other))

    def test_cache_key_tracks_dataset(self):
        a = GandKPosterior(dataset=np.array([1.0, 2.0, 3.0]))
        b = GandKPosterior(dataset=np.array([1.0, 2.0, 4.0]))
        assert a.cache_key.startswith("gandk-3-")
        assert a.cache_key != b.cache_key
        assert a.cache_key == GandKPosterior(dataset=np.array([1.0, 2.0, 3.0])).cache_key
