"""Target-density interface: a domain plus a counted log-proportional."""

from __future__ import annotations

import abc
from typing import Callable

import numpy as np

from ..lowdisc import Domain

# Stand-in log-density for failed evaluations. Weight normalization treats
# anything at or below this as zero mass; it is finite so arithmetic on
# recorded values never produces nan.
LOG_DENSITY_SENTINEL = -1e30


class TargetDensity(abc.ABC):
    """A log-proportional density over a box domain with budget accounting.

    `log_q` increments `eval_count` exactly once per call no matter how much
    work (data loops, simulation replicates) happens inside, matching how
    evaluation budgets are reported.
    """

    def __init__(self, domain: Domain, name: str) -> None:
        self.domain = domain
        self.name = name
        self.eval_count = 0

    def log_q(self, theta: np.ndarray) -> float:
        self.eval_count += 1
        return float(self._log_q(np.asarray(theta, dtype=float)))

    @abc.abstractmethod
    def _log_q(self, theta: np.ndarray) -> float:
        """Uncounted evaluation; implementations live here."""

    def log_q_batch(self, points: np.ndarray) -> np.ndarray:
        """Vectorized uncounted evaluation for metrics and plotting."""
        points = np.atleast_2d(points)
        return np.array([self._log_q(point) for point in points])

    @property
    def cache_key(self) -> str:
        """Stable identity for reference caching."""
        return self.name


class CustomTarget(TargetDensity):
    """Ad-hoc target from a callable; used by tests and small studies."""

    def __init__(
        self, domain: Domain, fn: Callable[[np.ndarray], float], name: str = "custom"
    ) -> None:
        super().__init__(domain, name)
        self._fn = fn

    def _log_q(self, theta: np.ndarray) -> float:
        return float(self._fn(theta))
