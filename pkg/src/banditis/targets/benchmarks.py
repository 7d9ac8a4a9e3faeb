"""Closed-form 2-d benchmark densities built from a correlated quadratic form.

Each benchmark maps theta to a pair of statistics (T1, T2) and scores them
with log q = -0.5 [T1, T2] [[1, rho], [rho, 1]] [T1, T2]^T; the choice of T2
shapes the density (identity, two modes, or a curved ridge).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..lowdisc import Domain
from .base import TargetDensity


@dataclass(frozen=True)
class BenchmarkSpec:
    """Quadratic-form benchmark: statistics T1, T2 and correlation rho."""

    name: str
    t1: Callable[[np.ndarray], np.ndarray]
    t2: Callable[[np.ndarray], np.ndarray]
    rho: float
    domain: Domain

    def __post_init__(self) -> None:
        if not -1.0 < self.rho < 1.0:
            raise ValueError("correlation must lie in (-1, 1)")


def benchmark_log_q(spec: BenchmarkSpec, theta: np.ndarray) -> float:
    """log q(theta) = -0.5 [T1, T2] [[1, rho], [rho, 1]] [T1, T2]^T."""
    theta = np.asarray(theta, dtype=float)
    if not bool(spec.domain.contains(theta)[0]):
        raise ValueError(f"theta {theta} outside the {spec.name} domain")
    t1 = float(spec.t1(theta))
    t2 = float(spec.t2(theta))
    return -0.5 * (t1 * t1 + 2.0 * spec.rho * t1 * t2 + t2 * t2)


class BenchmarkTarget(TargetDensity):
    """Counted wrapper over a BenchmarkSpec."""

    def __init__(self, spec: BenchmarkSpec) -> None:
        super().__init__(spec.domain, spec.name)
        self.spec = spec

    def _log_q(self, theta: np.ndarray) -> float:
        return benchmark_log_q(self.spec, theta)

    def log_q_batch(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        t1 = np.asarray(self.spec.t1(points.T))
        t2 = np.asarray(self.spec.t2(points.T))
        return -0.5 * (t1 * t1 + 2.0 * self.spec.rho * t1 * t2 + t2 * t2)


def gaussian_benchmark() -> BenchmarkTarget:
    """Correlated normal: T1 = theta_1, T2 = theta_2, rho = 0.25."""
    spec = BenchmarkSpec(
        name="gaussian",
        t1=lambda theta: theta[0],
        t2=lambda theta: theta[1],
        rho=0.25,
        domain=Domain(lower=np.array([-16.0, -16.0]), upper=np.array([16.0, 16.0])),
    )
    return BenchmarkTarget(spec)


def bimodal_benchmark() -> BenchmarkTarget:
    """Two symmetric modes: T2 = theta_2^2 - 2 creates them, rho = 0.5."""
    spec = BenchmarkSpec(
        name="bimodal",
        t1=lambda theta: theta[0],
        t2=lambda theta: theta[1] ** 2 - 2.0,
        rho=0.5,
        domain=Domain(lower=np.array([-6.0, -6.0]), upper=np.array([6.0, 6.0])),
    )
    return BenchmarkTarget(spec)


def banana_benchmark() -> BenchmarkTarget:
    """Curved ridge: T2 = theta_2 + theta_1^2 + 1, rho = 0.9."""
    spec = BenchmarkSpec(
        name="banana",
        t1=lambda theta: theta[0],
        t2=lambda theta: theta[1] + theta[0] ** 2 + 1.0,
        rho=0.9,
        domain=Domain(lower=np.array([-6.0, -20.0]), upper=np.array([6.0, 2.0])),
    )
    return BenchmarkTarget(spec)


BENCHMARKS: dict[str, Callable[[], BenchmarkTarget]] = {
    "gaussian": gaussian_benchmark,
    "bimodal": bimodal_benchmark,
    "banana": banana_benchmark,
}
