"""Unnormalized target densities the sampler can be pointed at."""

from .base import LOG_DENSITY_SENTINEL, CustomTarget, TargetDensity
from .benchmarks import (
    BENCHMARKS,
    BenchmarkTarget,
    banana_benchmark,
    benchmark_log_q,
    bimodal_benchmark,
    gaussian_benchmark,
)
from .gandk import (
    GandKParams,
    GandKPosterior,
    GkInversionError,
    gk_inverse_quantile,
    gk_log_density,
    gk_quantile,
    gk_quantile_deriv,
    gk_sample,
    normal_quantile,
)
from .lorenz import (
    LORENZ_DOMAIN,
    LORENZ_THETA_TRUE,
    LorenzConfig,
    LorenzPosterior,
    SimulationDivergedError,
    lorenz_simulate,
    lorenz_summaries,
    lorenz_synthetic_log_q,
    lorenz_synthetic_moments,
    make_lorenz_experiment,
    mix_seed,
    simulate_paths,
)

__all__ = [
    "BENCHMARKS",
    "BenchmarkTarget",
    "CustomTarget",
    "GandKParams",
    "GandKPosterior",
    "GkInversionError",
    "LOG_DENSITY_SENTINEL",
    "LORENZ_DOMAIN",
    "LORENZ_THETA_TRUE",
    "LorenzConfig",
    "LorenzPosterior",
    "SimulationDivergedError",
    "TargetDensity",
    "banana_benchmark",
    "benchmark_log_q",
    "bimodal_benchmark",
    "gaussian_benchmark",
    "gk_inverse_quantile",
    "gk_log_density",
    "gk_quantile",
    "gk_quantile_deriv",
    "gk_sample",
    "lorenz_simulate",
    "lorenz_summaries",
    "lorenz_synthetic_log_q",
    "lorenz_synthetic_moments",
    "make_lorenz_experiment",
    "mix_seed",
    "normal_quantile",
    "simulate_paths",
]
