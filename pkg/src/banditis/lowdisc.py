"""Low-discrepancy point streams and star-discrepancy estimators.

Halton sequences are used as the deterministic proposal stream: coordinate j of
point i is the radical inverse of i in the j-th prime base. Points are produced
on the open unit cube and affinely rescaled to a box domain. Star discrepancy is
measured exactly in one dimension and by an anchored-grid lower bound in up to
three dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _first_primes(count: int) -> tuple[int, ...]:
    """Return the first `count` primes by trial division."""
    primes: list[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return tuple(primes)


def halton_point(index: int, bases: tuple[int, ...]) -> np.ndarray:
    """Radical-inverse point of the Halton sequence, index origin 1.

    Args:
        index: 1-based sequence index.
        bases: one prime base per coordinate.

    Returns:
        Point in (0, 1)^d, coordinate j the base-`bases[j]` radical inverse
        of `index`.
    """
    if index < 1:
        raise ValueError(f"Halton index starts at 1, got {index}")
    point = np.empty(len(bases))
    for j, base in enumerate(bases):
        i = index
        value = 0.0
        scale = 1.0
        while i > 0:
            i, digit = divmod(i, base)
            scale /= base
            value += digit * scale
        point[j] = value
    return point


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box domain with strictly positive side lengths."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("domain bounds must be 1-d arrays of equal length")
        if not np.all(upper > lower):
            raise ValueError("domain requires upper > lower in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all((points >= self.lower) & (points <= self.upper), axis=1)


def scale_to_domain(unit_points: np.ndarray, domain: Domain) -> np.ndarray:
    """Affine map lower + widths * eta from the unit cube onto the domain."""
    unit_points = np.asarray(unit_points, dtype=float)
    return domain.lower + domain.widths * unit_points


@dataclass
class HaltonStream:
    """Sequential Halton source over the unit cube.

    The cursor is the index of the next point to emit (origin 1) and only ever
    advances; a stream instance has a single owner.
    """

    dim: int
    bases: tuple[int, ...] = ()
    cursor: int = 1

    def __post_init__(self) -> None:
        if not self.bases:
            self.bases = _first_primes(self.dim)
        if len(self.bases) != self.dim:
            raise ValueError("need one base per coordinate")
        if self.cursor < 1:
            raise ValueError("cursor starts at 1")

    def take(self, count: int) -> np.ndarray:
        """Emit the next `count` points, advancing the cursor."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        points = np.empty((count, self.dim))
        for row in range(count):
            points[row] = halton_point(self.cursor + row, self.bases)
        self.cursor += count
        return points

    def next_point(self) -> np.ndarray:
        return self.take(1)[0]


def _check_unit_points(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("star discrepancy of an empty point set is undefined")
    if np.any(points < 0.0) or np.any(points > 1.0):
        raise ValueError("points must lie in the unit cube")
    return points


def star_discrepancy_1d(points: np.ndarray) -> float:
    """Exact star discrepancy of a 1-d point set in [0, 1].

    For sorted points x_(1) <= ... <= x_(n) the supremum over anchored
    intervals is attained at order statistics:
    max_i max(i/n - x_(i), x_(i) - (i-1)/n).
    """
    points = _check_unit_points(points)
    if points.shape[1] != 1:
        raise ValueError("star_discrepancy_1d expects 1-d points")
    x = np.sort(points[:, 0])
    n = x.size
    ranks = np.arange(1, n + 1)
    return float(np.max(np.maximum(ranks / n - x, x - (ranks - 1) / n)))


def star_discrepancy_grid(points: np.ndarray, resolution: int) -> float:
    """Anchored-grid lower bound on star discrepancy for d <= 3.

    Scans all boxes [0, j/resolution] with grid corners, counting points both
    inclusively and exclusively of the box boundary so the two one-sided
    suprema of the discrepancy function are each captured to O(1/resolution).
    """
    points = _check_unit_points(points)
    n, d = points.shape
    if d > 3:
        raise ValueError("grid estimator supports at most 3 dimensions")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")

    shape = (resolution + 1,) * d
    closed = np.zeros(shape)
    open_ = np.zeros(shape)
    # Smallest grid index whose box edge includes (closed) or strictly
    # exceeds (open) each coordinate.
    idx_closed = np.ceil(points * resolution).astype(np.int64)
    idx_open = np.floor(points * resolution).astype(np.int64) + 1
    np.add.at(closed, tuple(idx_closed.T), 1.0)
    inside = np.all(idx_open <= resolution, axis=1)
    np.add.at(open_, tuple(idx_open[inside].T), 1.0)
    for axis in range(d):
        np.cumsum(closed, axis=axis, out=closed)
        np.cumsum(open_, axis=axis, out=open_)

    edges = np.arange(resolution + 1) / resolution
    volume = edges.copy()
    for _ in range(d - 1):
        volume = np.multiply.outer(volume, edges)
    return float(
        max(np.max(np.abs(closed / n - volume)), np.max(np.abs(open_ / n - volume)))
    )
