"""Closed-form benchmark densities against an independent matrix-form oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banditis.targets import BENCHMARKS, BenchmarkTarget

# Statistic maps restated independently of the library (oracle side).
ORACLE_FORMS = {
    "gaussian": (lambda th: th[0], lambda th: th[1], 0.25),
    "bimodal": (lambda th: th[0], lambda th: th[1] ** 2 - 2.0, 0.5),
    "banana": (lambda th: th[0], lambda th: th[1] + th[0] ** 2 + 1.0, 0.9),
}


def oracle_log_q(name: str, theta: np.ndarray) -> float:
    t1_fn, t2_fn, rho = ORACLE_FORMS[name]
    stats = np.array([t1_fn(theta), t2_fn(theta)])
    matrix = np.array([[1.0, rho], [rho, 1.0]])
    return float(-0.5 * stats @ matrix @ stats)


def random_in_domain(target: BenchmarkTarget, rng, size: int) -> np.ndarray:
    widths = target.domain.upper - target.domain.lower
    return target.domain.lower + rng.random((size, 2)) * widths


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_matches_matrix_oracle(name):
    target = BENCHMARKS[name]()
    rng = np.random.default_rng(411)
    for theta in random_in_domain(target, rng, 100):
        assert target.log_q(theta) == pytest.approx(
            oracle_log_q(name, theta), abs=1e-12
        )


@pytest.mark.parametrize(
    "name,theta,expected",
    [
        ("gaussian", (0.0, 0.0), 0.0),
        ("gaussian", (1.0, 1.0), -1.25),
        ("bimodal", (0.0, np.sqrt(2.0)), 0.0),
        ("bimodal", (0.0, -np.sqrt(2.0)), 0.0),
        ("bimodal", (1.0, 1.0), -0.5),
        ("banana", (0.0, -1.0), 0.0),
        ("banana", (1.0, 1.0), -7.7),
    ],
)
def test_known_values(name, theta, expected):
    target = BENCHMARKS[name]()
    assert target.log_q(np.array(theta)) == pytest.approx(expected, abs=1e-12)


def test_banana_ridge_profile():
    # Along theta_2 = -1 - theta_1^2 the second statistic vanishes, leaving
    # the marginal quadratic in theta_1 alone.
    target = BENCHMARKS["banana"]()
    for theta1 in [-2.0, -0.5, 0.0, 1.0, 2.5]:
        theta = np.array([theta1, -1.0 - theta1**2])
        assert target.log_q(theta) == pytest.approx(-0.5 * theta1**2, abs=1e-12)


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_out_of_domain_rejected(name):
    target = BENCHMARKS[name]()
    outside = target.domain.upper + 1.0
    with pytest.raises(ValueError, match="outside"):
        target.log_q(outside)


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_batch_matches_scalar_and_is_uncounted(name):
    target = BENCHMARKS[name]()
    points = random_in_domain(target, np.random.default_rng(2), 32)
    batch = target.log_q_batch(points)
    assert target.eval_count == 0
    scalar = np.array([target.log_q(point) for point in points])
    assert target.eval_count == len(points)
    np.testing.assert_allclose(batch, scalar, rtol=0, atol=1e-14)


def test_registry_names_and_domains():
    assert sorted(BENCHMARKS) == ["banana", "bimodal", "gaussian"]
    gaussian = BENCHMARKS["gaussian"]()
    bimodal = BENCHMARKS["bimodal"]()
    banana = BENCHMARKS["banana"]()
    assert gaussian.name == "gaussian" and gaussian.cache_key == "gaussian"
    np.testing.assert_array_equal(gaussian.domain.lower, [-16.0, -16.0])
    np.testing.assert_array_equal(gaussian.domain.upper, [16.0, 16.0])
    np.testing.assert_array_equal(bimodal.domain.lower, [-6.0, -6.0])
    np.testing.assert_array_equal(bimodal.domain.upper, [6.0, 6.0])
    np.testing.assert_array_equal(banana.domain.lower, [-6.0, -20.0])
    np.testing.assert_array_equal(banana.domain.upper, [6.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(
    name=st.sampled_from(sorted(BENCHMARKS)),
    eta=st.tuples(
        st.floats(min_value=1e-6, max_value=1.0 - 1e-6),
        st.floats(min_value=1e-6, max_value=1.0 - 1e-6),
    ),
)
def test_log_q_never_positive(name, eta):
    # The quadratic form's matrix is positive definite for |rho| < 1, so the
    # log-density is bounded above by its value at T = 0.
    target = BENCHMARKS[name]()
    widths = target.domain.upper - target.domain.lower
    theta = target.domain.lower + np.array(eta) * widths
    assert target.log_q(theta) <= 1e-15
