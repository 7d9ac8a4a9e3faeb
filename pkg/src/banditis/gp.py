"""Exact Gaussian-process regression for density surrogates.

A Gaussian kernel GP with zero or quadratic (no cross terms) prior mean is fit
to transformed density values. The posterior is represented by the Cholesky
factor of K_n + (sigma_obs^2 + jitter) I and the solved weight vector, so pool
predictions are O(M n) after the O(n^3) factorization. Hyperparameters are
found by multi-start Nelder-Mead on the log marginal likelihood in log space,
with quadratic-mean coefficients profiled out by generalized least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, optimize

from .lowdisc import Domain

# Diagonal jitter escalation, relative to the kernel variance.
_JITTER_START = 1e-8
_JITTER_LIMIT = 1e-2
# Inside the evidence objective the escalation is capped much tighter:
# letting a near-singular kernel matrix absorb large jitter would silently
# swap in a different (noisier) model and hand degenerate hyperparameters an
# unfair likelihood advantage.
_MLE_JITTER_LIMIT = 1e-6
_PENALTY = 1e12


class GPFitError(RuntimeError):
    """Factorization failed after exhausting jitter escalation."""


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel k(x, y) = variance * exp(-||x - y||^2 / (2 l^2))."""

    lengthscale: float
    variance: float

    def __post_init__(self) -> None:
        if self.lengthscale <= 0 or self.variance <= 0:
            raise ValueError("kernel lengthscale and variance must be positive")

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        sq = (
            np.sum(np.square(a), axis=1)[:, None]
            + np.sum(np.square(b), axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return self.variance * np.exp(-0.5 * sq / self.lengthscale**2)


@dataclass(frozen=True)
class MeanSpec:
    """Prior mean: zero, or intercept + linear + pure-quadratic terms.

    Quadratic coefficients are laid out as (intercept, d linear, d quadratic);
    cross terms are deliberately absent.
    """

    coefficients: np.ndarray | None = None

    @property
    def is_zero(self) -> bool:
        return self.coefficients is None

    @staticmethod
    def features(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        ones = np.ones((points.shape[0], 1))
        return np.hstack([ones, points, np.square(points)])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.coefficients is None:
            return np.zeros(points.shape[0])
        expected = 1 + 2 * points.shape[1]
        if self.coefficients.size != expected:
            raise ValueError(
                f"quadratic mean needs {expected} coefficients, "
                f"got {self.coefficients.size}"
            )
        return self.features(points) @ self.coefficients


@dataclass(frozen=True)
class TrainingSet:
    """Evaluated inputs with transformed outputs and observation noise."""

    inputs: np.ndarray
    outputs: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self) -> None:
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float).ravel()
        if inputs.shape[0] != outputs.size or inputs.shape[0] < 1:
            raise ValueError("need one output per input point, n >= 1")
        if not np.all(np.isfinite(outputs)) or not np.all(np.isfinite(inputs)):
            raise ValueError("training data must be finite")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")
        # Duplicate inputs make the noise-free kernel matrix singular.
        order = np.lexsort(inputs.T)
        if inputs.shape[0] > 1 and np.any(
            np.all(np.diff(inputs[order], axis=0) == 0.0, axis=1)
        ):
            raise ValueError("training inputs must be pairwise distinct")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @property
    def size(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class GPPrior:
    """Prior mean and kernel; predicts prior marginals (n = 0 posterior)."""

    mean: MeanSpec
    kernel: KernelSpec

    def predict_mean(self, points: np.ndarray) -> np.ndarray:
        return self.mean.evaluate(points)

    def predict_var(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.full(points.shape[0], self.kernel.variance)


@dataclass(frozen=True)
class Hyperparameters:
    """Kernel (and optionally noise) parameters in log space plus mean."""

    log_lengthscale: float
    log_variance: float
    mean_coefficients: np.ndarray | None = None
    log_noise_variance: float | None = None

    def kernel(self) -> KernelSpec:
        return KernelSpec(
            lengthscale=float(np.exp(self.log_lengthscale)),
            variance=float(np.exp(self.log_variance)),
        )

    def mean(self) -> MeanSpec:
        return MeanSpec(coefficients=self.mean_coefficients)

    def noise_variance(self, default: float) -> float:
        if self.log_noise_variance is None:
            return default
        return float(np.exp(self.log_noise_variance))

    def to_dict(self) -> dict:
        return {
            "log_lengthscale": self.log_lengthscale,
            "log_variance": self.log_variance,
            "mean_coefficients": (
                None
                if self.mean_coefficients is None
                else [float(c) for c in self.mean_coefficients]
            ),
            "log_noise_variance": self.log_noise_variance,
        }


@dataclass(frozen=True)
class GPPosterior:
    """Factorized exact GP posterior."""

    prior: GPPrior
    training: TrainingSet
    factor: np.ndarray
    weights: np.ndarray
    jitter: float

    def predict_mean(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        cross = self.prior.kernel.matrix(self.training.inputs, points)
        return self.prior.mean.evaluate(points) + cross.T @ self.weights

    def predict_var(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        cross = self.prior.kernel.matrix(self.training.inputs, points)
        half = linalg.solve_triangular(self.factor, cross, lower=True)
        var = self.prior.kernel.variance - np.sum(np.square(half), axis=0)
        return np.maximum(var, 0.0)


def _factorize(
    kernel: KernelSpec, training: TrainingSet, limit: float = _JITTER_LIMIT
) -> tuple[np.ndarray, float]:
    """Cholesky of K + (noise + jitter) I with escalating jitter."""
    gram = kernel.matrix(training.inputs, training.inputs)
    diagonal = np.arange(training.size)
    jitter = _JITTER_START * kernel.variance
    base = gram.copy()
    base[diagonal, diagonal] += training.noise_variance
    while jitter <= limit * kernel.variance * (1 + 1e-12):
        attempt = base.copy()
        attempt[diagonal, diagonal] += jitter
        try:
            return linalg.cholesky(attempt, lower=True), jitter
        except linalg.LinAlgError:
            jitter *= 10.0
    raise GPFitError(
        "kernel matrix not positive definite at maximal jitter "
        f"{limit * kernel.variance:.3e} (n={training.size}, "
        f"lengthscale={kernel.lengthscale:.3e})"
    )


def fit(prior: GPPrior, training: TrainingSet) -> GPPosterior:
    """Factorize the prior against the training set."""
    factor, jitter = _factorize(prior.kernel, training)
    residual = training.outputs - prior.mean.evaluate(training.inputs)
    weights = linalg.cho_solve((factor, True), residual)
    return GPPosterior(
        prior=prior, training=training, factor=factor, weights=weights, jitter=jitter
    )


def log_marginal_likelihood(
    prior: GPPrior, training: TrainingSet, jitter_limit: float = _JITTER_LIMIT
) -> float:
    """Gaussian evidence of the outputs under the prior."""
    factor, _ = _factorize(prior.kernel, training, limit=jitter_limit)
    residual = training.outputs - prior.mean.evaluate(training.inputs)
    solved = linalg.cho_solve((factor, True), residual)
    return float(
        -0.5 * residual @ solved
        - np.sum(np.log(np.diag(factor)))
        - 0.5 * training.size * np.log(2.0 * np.pi)
    )


def profile_quadratic_mean(
    kernel: KernelSpec,
    training: TrainingSet,
    noise_variance: float | None = None,
    jitter_limit: float = _JITTER_LIMIT,
) -> MeanSpec:
    """GLS-optimal quadratic mean coefficients under the given kernel."""
    working = training
    if noise_variance is not None:
        working = replace(training, noise_variance=noise_variance)
    factor, _ = _factorize(kernel, working, limit=jitter_limit)
    design = MeanSpec.features(working.inputs)
    white_design = linalg.solve_triangular(factor, design, lower=True)
    white_outputs = linalg.solve_triangular(factor, working.outputs, lower=True)
    coefficients, *_ = np.linalg.lstsq(white_design, white_outputs, rcond=None)
    return MeanSpec(coefficients=coefficients)


@dataclass(frozen=True)
class MleConfig:
    """Search box and budget for hyperparameter maximum likelihood.

    The variance ceiling is intentionally low for log-density outputs that
    span hundreds of units: when the data variance exceeds it, the fit pins
    the signal variance at the ceiling, and the leftover posterior variance
    in coverage gaps stays at a scale useful for exploration instead of
    collapsing or exploding with the raw data spread.
    """

    lengthscale_log_bounds: tuple[float, float]
    variance_log_bounds: tuple[float, float] = (-6.0, 8.0)
    noise_mode: str = "fixed"  # fixed | mle
    noise_variance: float = 0.0
    noise_log_bounds: tuple[float, float] = (-16.0, 2.0)
    restarts: int = 8
    max_iterations: int = 120

    @staticmethod
    def from_domain(domain: Domain, **overrides) -> "MleConfig":
        diameter = domain.diameter
        bounds = (np.log(0.01 * diameter), np.log(2.0 * diameter))
        return MleConfig(lengthscale_log_bounds=bounds, **overrides)


def _box_bounds(config: MleConfig) -> list[tuple[float, float]]:
    bounds = [config.lengthscale_log_bounds, config.variance_log_bounds]
    if config.noise_mode == "mle":
        bounds.append(config.noise_log_bounds)
    return bounds


def _evidence_objective(
    params: np.ndarray, training: TrainingSet, mean_form: str, config: MleConfig
) -> float:
    kernel = KernelSpec(
        lengthscale=float(np.exp(params[0])), variance=float(np.exp(params[1]))
    )
    noise = (
        float(np.exp(params[2]))
        if config.noise_mode == "mle"
        else config.noise_variance
    )
    working = replace(training, noise_variance=noise)
    # The tight jitter cap keeps the comparison honest: hyperparameters whose
    # kernel matrix only factorizes under heavy regularization are rejected
    # instead of being scored with quietly inflated noise.
    try:
        if mean_form == "quadratic":
            mean = profile_quadratic_mean(
                kernel, working, jitter_limit=_MLE_JITTER_LIMIT
            )
        else:
            mean = MeanSpec()
        return -log_marginal_likelihood(
            GPPrior(mean=mean, kernel=kernel), working, jitter_limit=_MLE_JITTER_LIMIT
        )
    except (GPFitError, np.linalg.LinAlgError):
        return _PENALTY


def mle_fit(
    training: TrainingSet,
    mean_form: str,
    config: MleConfig,
    seed: int,
    fallback: Hyperparameters | None = None,
) -> tuple[Hyperparameters, GPPosterior]:
    """Multi-start simplex search for evidence-maximizing hyperparameters.

    Restart 1 is warm-started from `fallback` when given (otherwise the box
    midpoint); the rest draw uniformly from the log-space search box. If every
    restart fails to factorize, `fallback` is refit and returned; with no
    fallback the failure propagates.
    """
    if training.size < 2:
        raise ValueError("hyperparameter search needs at least 2 points")
    if mean_form not in ("zero", "quadratic"):
        raise ValueError(f"unknown mean form: {mean_form}")
    bounds = _box_bounds(config)
    rng = np.random.default_rng(seed)

    starts = [np.array([0.5 * (lo + hi) for lo, hi in bounds])]
    if fallback is not None:
        warm = [fallback.log_lengthscale, fallback.log_variance]
        if config.noise_mode == "mle":
            warm.append(
                fallback.log_noise_variance
                if fallback.log_noise_variance is not None
                else np.log(max(config.noise_variance, 1e-12))
            )
        starts[0] = np.clip(
            np.asarray(warm), [lo for lo, _ in bounds], [hi for _, hi in bounds]
        )
    while len(starts) < config.restarts:
        starts.append(
            np.array([rng.uniform(lo, hi) for lo, hi in bounds])
        )

    best_params = None
    best_value = np.inf
    for start in starts:
        result = optimize.minimize(
            _evidence_objective,
            start,
            args=(training, mean_form, config),
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "maxiter": config.max_iterations,
                "xatol": 1e-3,
                "fatol": 1e-3,
            },
        )
        start_value = _evidence_objective(start, training, mean_form, config)
        value = min(result.fun, start_value)
        candidate = result.x if result.fun <= start_value else start
        if value < best_value:
            best_value = value
            best_params = candidate

    if best_params is None or best_value >= _PENALTY:
        if fallback is not None:
            posterior = _fit_hyperparameters(fallback, training, config)
            return fallback, posterior
        raise GPFitError("every hyperparameter restart failed to factorize")

    noise_log = float(best_params[2]) if config.noise_mode == "mle" else None
    hyper = Hyperparameters(
        log_lengthscale=float(best_params[0]),
        log_variance=float(best_params[1]),
        log_noise_variance=noise_log,
    )
    if mean_form == "quadratic":
        kernel = hyper.kernel()
        noise = hyper.noise_variance(config.noise_variance)
        mean = profile_quadratic_mean(kernel, training, noise_variance=noise)
        hyper = replace(hyper, mean_coefficients=mean.coefficients)
    posterior = _fit_hyperparameters(hyper, training, config)
    return hyper, posterior


def _fit_hyperparameters(
    hyper: Hyperparameters, training: TrainingSet, config: MleConfig
) -> GPPosterior:
    noise = hyper.noise_variance(config.noise_variance)
    working = replace(training, noise_variance=noise)
    prior = GPPrior(mean=hyper.mean(), kernel=hyper.kernel())
    return fit(prior, working)
