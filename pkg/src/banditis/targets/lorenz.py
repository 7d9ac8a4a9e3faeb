"""Stochastic Lorenz-96 dynamics and a synthetic-likelihood posterior.

State variable k of the cyclic 40-variable system follows
dx_k/dt = -x_{k-1}(x_{k-2} - x_{k+1}) - x_k + 10 - theta_1 - theta_2 x_k + eta_k
where eta is an AR(1) forcing refreshed between integrator steps and held
constant within each RK4 step. Observations are the state every 0.2 time
units over [0, 4]. The likelihood of a parameter is synthetic: six summary
statistics of the observed path scored under a Gaussian whose moments come
from R simulated replicate paths.

The path integrator is a numba kernel: the 10,000-node reference posterior
costs 10^7 replicate paths, far beyond plain numpy on one core. All noise for
an evaluation is drawn in one vectorized batch keyed by the evaluation seed,
with replicate r consuming block r of the array; paths replay bit-exactly and
do not depend on how many replicates share a batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import linalg

from ..lowdisc import Domain
from .base import TargetDensity

N_SUMMARIES = 6

LORENZ_DOMAIN = Domain(lower=np.array([0.0, 0.0]), upper=np.array([5.0, 0.5]))
LORENZ_THETA_TRUE = np.array([2.0, 0.1])


class SimulationDivergedError(RuntimeError):
    """The integrator produced non-finite state."""


@dataclass(frozen=True)
class LorenzConfig:
    """Model constants, integrator grid, and replicate budget."""

    initial_state: np.ndarray
    n_state: int = 40
    forcing: float = 10.0
    ar_coefficient: float = 0.4
    step: float = 0.025
    horizon: float = 4.0
    observation_interval: float = 0.2
    replicates: int = 1000

    def __post_init__(self) -> None:
        initial = np.asarray(self.initial_state, dtype=float).ravel()
        if initial.size != self.n_state:
            raise ValueError("initial state length must match n_state")
        if not 0.0 <= self.ar_coefficient <= 1.0:
            raise ValueError("AR coefficient must lie in [0, 1]")
        ratio = self.observation_interval / self.step
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("step must divide the observation interval")
        if self.replicates < N_SUMMARIES + 2:
            raise ValueError("need at least d_s + 2 replicates for a covariance")
        object.__setattr__(self, "initial_state", initial)

    @property
    def obs_stride(self) -> int:
        return round(self.observation_interval / self.step)

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.step)

    @property
    def n_observations(self) -> int:
        return self.n_steps // self.obs_stride


def mix_seed(master_seed: int, index: int) -> int:
    """splitmix64 finalizer over a (seed, index) pair; decorrelates streams."""
    mask = (1 << 64) - 1
    z = (master_seed * 0x9E3779B97F4A7C15 + index + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask


@njit(cache=True)
def _drift(x, eta, theta1, theta2, forcing, out):
    n = x.shape[0]
    for k in range(n):
        km1 = k - 1 if k >= 1 else n - 1
        km2 = k - 2 if k >= 2 else n + k - 2
        kp1 = k + 1 if k < n - 1 else 0
        out[k] = (
            -x[km1] * (x[km2] - x[kp1])
            - x[k]
            + forcing
            - theta1
            - theta2 * x[k]
            + eta[k]
        )


@njit(cache=True)
def _simulate_batch(x0, theta1, theta2, forcing, phi, dt, n_steps, obs_stride, noise):
    n = x0.shape[0]
    replicates = noise.shape[0]
    n_obs = n_steps // obs_stride
    out = np.empty((replicates, n_obs, n))
    amplitude = np.sqrt(1.0 - phi * phi)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    xt = np.empty(n)
    eta = np.empty(n)
    x = np.empty(n)
    for r in range(replicates):
        for k in range(n):
            x[k] = x0[k]
            eta[k] = amplitude * noise[r, 0, k]
        obs_index = 0
        for step in range(n_steps):
            # Noise is frozen across the four stages of one step.
            _drift(x, eta, theta1, theta2, forcing, k1)
            for k in range(n):
                xt[k] = x[k] + 0.5 * dt * k1[k]
            _drift(xt, eta, theta1, theta2, forcing, k2)
            for k in range(n):
                xt[k] = x[k] + 0.5 * dt * k2[k]
            _drift(xt, eta, theta1, theta2, forcing, k3)
            for k in range(n):
                xt[k] = x[k] + dt * k3[k]
            _drift(xt, eta, theta1, theta2, forcing, k4)
            for k in range(n):
                x[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
            for k in range(n):
                eta[k] = phi * eta[k] + amplitude * noise[r, step + 1, k]
            if (step + 1) % obs_stride == 0:
                for k in range(n):
                    out[r, obs_index, k] = x[k]
                obs_index += 1
    return out


def simulate_paths(
    config: LorenzConfig, theta: np.ndarray, eval_seed: int, replicates: int
) -> np.ndarray:
    """R replicate paths as an (R, n_observations, n_state) array."""
    theta = np.asarray(theta, dtype=float)
    noise = np.random.default_rng(eval_seed).standard_normal(
        (replicates, config.n_steps + 1, config.n_state)
    )
    paths = _simulate_batch(
        config.initial_state,
        float(theta[0]),
        float(theta[1]),
        config.forcing,
        config.ar_coefficient,
        config.step,
        config.n_steps,
        config.obs_stride,
        noise,
    )
    if not np.all(np.isfinite(paths)):
        raise SimulationDivergedError(
            f"non-finite state at theta={theta} (seed {eval_seed})"
        )
    return paths


def lorenz_simulate(
    config: LorenzConfig, theta: np.ndarray, seed: int
) -> np.ndarray:
    """One observed path as an (n_state, n_observations) matrix."""
    path = simulate_paths(config, theta, seed, replicates=1)[0]
    return path.T.copy()


def _summaries_batch(paths: np.ndarray) -> np.ndarray:
    """Summaries of an (R, n_time, n_state) path stack, one row per path."""
    means = paths.mean(axis=1)
    dev = paths - means[:, None, :]
    prev_var = np.roll(dev, 1, axis=2)
    next_var = np.roll(dev, -1, axis=2)
    return np.column_stack(
        [
            means.mean(axis=1),
            np.mean(dev**2, axis=(1, 2)),
            np.mean(dev[:, :-1, :] * dev[:, 1:, :], axis=(1, 2)),
            np.mean(dev * next_var, axis=(1, 2)),
            np.mean(dev[:, :-1, :] * prev_var[:, 1:, :], axis=(1, 2)),
            np.mean(dev[:, :-1, :] * next_var[:, 1:, :], axis=(1, 2)),
        ]
    )


def lorenz_summaries(path: np.ndarray) -> np.ndarray:
    """Six summary statistics of an (n_state, n_time) path.

    Per variable then averaged over variables: temporal mean, temporal
    variance, lag-1 autocovariance, covariance with the next variable, and
    the two lag-1 cross-covariances with the previous/next variable. All
    covariances use deviations from each series' own temporal mean; lagged
    products average over the aligned pairs.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[1] < 2:
        raise ValueError("path must be (n_state, n_time) with n_time >= 2")
    return _summaries_batch(path.T[None, :, :])[0]


def lorenz_synthetic_moments(
    config: LorenzConfig, theta: np.ndarray, seed: int, replicates: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and covariance of replicate summaries at theta."""
    replicates = config.replicates if replicates is None else replicates
    paths = simulate_paths(config, theta, seed, replicates)
    summaries = _summaries_batch(paths)
    return summaries.mean(axis=0), np.cov(summaries, rowvar=False, ddof=1)


def _gaussian_log_density(residual: np.ndarray, covariance: np.ndarray) -> float:
    try:
        factor = linalg.cholesky(covariance, lower=True)
    except linalg.LinAlgError:
        ridge = 1e-8 * np.trace(covariance) / covariance.shape[0]
        covariance = covariance + ridge * np.eye(covariance.shape[0])
        factor = linalg.cholesky(covariance, lower=True)
    solved = linalg.solve_triangular(factor, residual, lower=True)
    return float(
        -0.5 * solved @ solved
        - np.sum(np.log(np.diag(factor)))
        - 0.5 * residual.size * np.log(2.0 * np.pi)
    )


def lorenz_synthetic_log_q(
    config: LorenzConfig,
    theta: np.ndarray,
    observed_summaries: np.ndarray,
    seed: int,
    replicates: int | None = None,
) -> float:
    """Gaussian synthetic log-likelihood of the observed summaries."""
    mean, covariance = lorenz_synthetic_moments(config, theta, seed, replicates)
    residual = np.asarray(observed_summaries, dtype=float) - mean
    return _gaussian_log_density(residual, covariance)


def make_lorenz_experiment(
    master_seed: int,
    replicates: int = 1000,
    theta_true: np.ndarray = LORENZ_THETA_TRUE,
) -> tuple[LorenzConfig, np.ndarray, np.ndarray]:
    """Config with seeded initial state, plus observed path and summaries.

    The initial state is drawn once from a standard normal and then treated
    as known: every replicate at every theta starts from it. The observed
    path gets its own noise stream.
    """
    init_rng = np.random.default_rng(mix_seed(master_seed, 1))
    initial_state = init_rng.standard_normal(40)
    config = LorenzConfig(initial_state=initial_state, replicates=replicates)
    observed_path = lorenz_simulate(config, theta_true, mix_seed(master_seed, 2))
    return config, observed_path, lorenz_summaries(observed_path)


class LorenzPosterior(TargetDensity):
    """Synthetic-likelihood posterior over (theta_1, theta_2).

    Each evaluation simulates R fresh replicate paths under a seed derived
    from (master seed, evaluation index); one call is one budget unit.
    """

    def __init__(
        self,
        config: LorenzConfig,
        observed_summaries: np.ndarray,
        master_seed: int,
        name: str = "lorenz",
    ) -> None:
        super().__init__(LORENZ_DOMAIN, name)
        self.config = config
        self.observed_summaries = np.asarray(observed_summaries, dtype=float)
        self.master_seed = master_seed

    def _log_q(self, theta: np.ndarray) -> float:
        eval_seed = mix_seed(self.master_seed, 0x10000 + self.eval_count)
        return lorenz_synthetic_log_q(
            self.config, theta, self.observed_summaries, eval_seed
        )

    @property
    def cache_key(self) -> str:
        return f"{self.name}-r{self.config.replicates}-s{self.master_seed}"
