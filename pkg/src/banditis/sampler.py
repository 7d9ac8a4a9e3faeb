"""Pool-restricted surrogate-guided importance sampling and its baselines.

A run consumes a deterministic proposal stream (Halton by default) in three
roles: initial evaluations taken as-is, a fixed-size candidate pool, and
backfill. After the initial phase, each step fits a GP surrogate to every
evaluation so far and spends one density evaluation on the pool point with the
largest posterior expectation of the density (the upper Jensen bound of the
link family). The evaluated point leaves the pool and the next stream point
takes its place, so the pool size stays constant and no point is ever
revisited. The surrogate only steers where the budget goes; final weights are
plain self-normalized density ratios against the proposal, so the estimator
stays an importance sampler no matter how wrong the surrogate is.

Baselines: `standard_is` weights the raw stream, and `randomized_bo_is`
alternates a continuous-domain acquisition maximizer with stream points, the
optimizer-driven strategy whose late-run collapse onto the mode is the failure
that pool restriction avoids.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np
from scipy import optimize

from .acquisition import Phi, transform_output, ujb, ujb_log
from .gp import (
    GPFitError,
    GPPosterior,
    GPPrior,
    Hyperparameters,
    MeanSpec,
    MleConfig,
    TrainingSet,
    fit,
    mle_fit,
    profile_quadratic_mean,
)
from .lowdisc import Domain, HaltonStream, scale_to_domain
from .targets import LOG_DENSITY_SENTINEL, TargetDensity

_MEAN_FORMS = ("zero", "quadratic")
_KERNEL_MODES = ("mle", "fixed")
_NOISE_MODES = ("fixed", "mle")

# Pool predictions run in blocks so a large pool never materializes an
# (n x M) cross-kernel matrix all at once.
_POOL_CHUNK = 16384

# Continuous acquisition ascent for the optimizer-driven baseline.
_ASCENT_STARTS = 16
_ASCENT_MAX_ITER = 100

# Points closer than this to an already-recorded one are kept in the sample
# set (they consumed budget) but left out of surrogate training, where exact
# duplicates would make the kernel matrix singular.
_MERGE_RADIUS = 1e-8

_EVALUATION_ERRORS = (RuntimeError, ValueError, ArithmeticError)


class ProposalStream(Protocol):
    """Unit-cube point source consumed left to right by a single owner.

    `cursor` is the 1-based index of the next point; stream indices recorded
    by the sampler refer to these positions.
    """

    dim: int
    cursor: int

    def take(self, count: int) -> np.ndarray: ...


class UniformStream:
    """I.i.d. uniform stream on the unit cube.

    Drop-in for the Halton stream when independence across draws matters more
    than low discrepancy, as in rate checks under random proposals.
    """

    def __init__(self, dim: int, seed: int) -> None:
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.cursor = 1
        self._rng = np.random.default_rng(seed)

    def take(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be nonnegative")
        self.cursor += count
        return self._rng.uniform(size=(count, self.dim))

    def next_point(self) -> np.ndarray:
        return self.take(1)[0]


@dataclass(frozen=True)
class BisConfig:
    """Budget, pool, link, and surrogate settings for one sampling run.

    `n_initial` defaults to ceil(n_total / 10). With `kernel_mode="mle"` the
    kernel (and the observation noise when `noise_mode="mle"`) is re-estimated
    every `refit_stride` selection steps, warm-started from the previous
    estimate and simply retained in between; "fixed" pins the kernel to
    `fixed_kernel = (lengthscale, variance)`. Quadratic mean coefficients are
    never searched: they are profiled in closed form against whatever kernel
    is current, in every mode. `noise_variance` applies on the surrogate's
    training scale, where it regularizes nominally noise-free evaluations.
    """

    n_total: int
    n_initial: int | None = None
    pool_size: int = 2048
    phi: Phi = Phi.EXP
    mean_form: str = "zero"
    kernel_mode: str = "mle"
    fixed_kernel: tuple[float, float] | None = None
    refit_stride: int = 1
    noise_mode: str = "fixed"
    noise_variance: float = 1e-6
    mle_restarts: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_total < 2:
            raise ValueError("n_total must be at least 2")
        n_initial = self.initial_count
        if not 1 <= n_initial < self.n_total:
            raise ValueError(
                f"need 1 <= n_initial < n_total, got {n_initial} of {self.n_total}"
            )
        if self.pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        if not isinstance(self.phi, Phi):
            raise ValueError(f"phi must be a Phi member, got {self.phi!r}")
        if self.mean_form not in _MEAN_FORMS:
            raise ValueError(f"mean_form must be one of {_MEAN_FORMS}")
        if self.kernel_mode not in _KERNEL_MODES:
            raise ValueError(f"kernel_mode must be one of {_KERNEL_MODES}")
        if self.noise_mode not in _NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {_NOISE_MODES}")
        if self.kernel_mode == "fixed":
            if self.fixed_kernel is None:
                raise ValueError("kernel_mode='fixed' requires fixed_kernel")
            lengthscale, variance = self.fixed_kernel
            if lengthscale <= 0 or variance <= 0:
                raise ValueError("fixed_kernel entries must be positive")
            if self.noise_mode != "fixed":
                raise ValueError("a fixed kernel requires fixed noise")
        if self.refit_stride < 1:
            raise ValueError("refit_stride must be at least 1")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        if self.mle_restarts < 1:
            raise ValueError("mle_restarts must be at least 1")

    @property
    def initial_count(self) -> int:
        if self.n_initial is not None:
            return self.n_initial
        return math.ceil(self.n_total / 10)


@dataclass(frozen=True)
class IterationRecord:
    """One budgeted evaluation, serializable as a JSON-lines row.

    `kind` is "stream" for points taken directly off the proposal stream
    (initialization, the plain-IS baseline, and the random half of the
    optimizer baseline), "ujb" for pool argmax selections, and "ascent" for
    continuous acquisition maximizers, which carry no stream index. The
    acquisition value is the selection score, which for the Exp link is the
    log of the upper Jensen bound.
    """

    n: int
    kind: str
    stream_index: int | None
    point: tuple[float, ...]
    log_q: float
    acquisition: float | None
    hyperparameters: dict | None
    elapsed: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kind": self.kind,
            "stream_index": self.stream_index,
            "point": list(self.point),
            "log_q": self.log_q,
            "acquisition": self.acquisition,
            "hyperparameters": self.hyperparameters,
            "elapsed": self.elapsed,
        }


@dataclass
class CandidatePool:
    """Fixed-size window of unevaluated proposal points in stream order.

    Rows stay ascending in stream index: `swap` deletes the chosen row and
    appends the backfill, so an argmax over rows that returns the first
    maximum breaks score ties toward the lowest stream index for free.
    """

    domain: Domain
    stream: ProposalStream
    points: np.ndarray
    stream_indices: np.ndarray
    log_u: float

    @classmethod
    def initialize(
        cls, domain: Domain, stream: ProposalStream, size: int, log_u: float
    ) -> "CandidatePool":
        if size < 1:
            raise ValueError("pool size must be at least 1")
        indices = np.arange(stream.cursor, stream.cursor + size, dtype=np.int64)
        points = scale_to_domain(stream.take(size), domain)
        return cls(
            domain=domain,
            stream=stream,
            points=points,
            stream_indices=indices,
            log_u=log_u,
        )

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def swap(self, position: int) -> tuple[np.ndarray, int]:
        """Remove the point at `position` and backfill from the stream."""
        if not 0 <= position < self.size:
            raise IndexError(f"pool position {position} out of range")
        chosen = self.points[position].copy()
        chosen_index = int(self.stream_indices[position])
        incoming_index = self.stream.cursor
        incoming = scale_to_domain(self.stream.take(1), self.domain)
        self.points = np.vstack([np.delete(self.points, position, axis=0), incoming])
        self.stream_indices = np.append(
            np.delete(self.stream_indices, position), np.int64(incoming_index)
        )
        return chosen, chosen_index


@dataclass(frozen=True)
class WeightedSampleSet:
    """Evaluated points with self-normalized weights, in evaluation order.

    `stream_indices` holds the 1-based proposal position of each point, or -1
    for continuously optimized points that never lived on the stream. The
    final pool is kept for audit so the stream can be reconstructed: for a
    pool-restricted run, sample indices and pool indices together are exactly
    the first pool_size + n_total stream positions.
    """

    points: np.ndarray
    log_ratios: np.ndarray
    weights: np.ndarray
    stream_indices: np.ndarray
    trace: tuple[IterationRecord, ...]
    log_u: float
    pool_points: np.ndarray | None = None
    pool_stream_indices: np.ndarray | None = None

    def __post_init__(self) -> None:
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        ratios = np.asarray(self.log_ratios, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        indices = np.asarray(self.stream_indices, dtype=np.int64).ravel()
        n = points.shape[0]
        if n < 1 or ratios.size != n or weights.size != n or indices.size != n:
            raise ValueError("points, log_ratios, weights, stream_indices must align")
        if np.any(weights < 0) or abs(float(np.sum(weights)) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "log_ratios", ratios)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "stream_indices", indices)
        object.__setattr__(self, "trace", tuple(self.trace))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def effective_sample_size(self) -> float:
        return float(1.0 / np.sum(np.square(self.weights)))

    def prefix(self, count: int) -> "WeightedSampleSet":
        """First `count` evaluations with weights renormalized to that budget.

        Plain-stream runs make this the run that a smaller budget would have
        produced; for guided runs it is the anytime estimate after `count`
        evaluations.
        """
        if not 1 <= count <= self.size:
            raise ValueError(f"prefix length {count} outside 1..{self.size}")
        ratios = self.log_ratios[:count].copy()
        return WeightedSampleSet(
            points=self.points[:count].copy(),
            log_ratios=ratios,
            weights=self_normalize(ratios),
            stream_indices=self.stream_indices[:count].copy(),
            trace=self.trace[:count],
            log_u=self.log_u,
        )


def self_normalize(log_ratios: np.ndarray) -> np.ndarray:
    """Simplex weights exp(l_n - logsumexp(l)) from log density ratios.

    Entries at or below the failure sentinel, and -inf entries, get weight
    exactly 0. Requires at least one entry above the sentinel; +inf and nan
    are rejected rather than propagated into the normalization.
    """
    ratios = np.asarray(log_ratios, dtype=float).ravel()
    if ratios.size == 0:
        raise ValueError("cannot normalize an empty log-ratio vector")
    if np.any(np.isnan(ratios)) or np.any(np.isposinf(ratios)):
        raise ValueError("log ratios must lie in [-inf, inf)")
    live = ratios > LOG_DENSITY_SENTINEL
    if not np.any(live):
        raise ValueError("no successful evaluations to normalize")
    # Shift by the max, not a generic logsumexp, so the largest entry
    # exponentiates to exactly 1 and nothing overflows.
    shift = float(np.max(ratios[live]))
    weights = np.zeros(ratios.size)
    weights[live] = np.exp(ratios[live] - shift)
    weights /= np.sum(weights)
    return weights


def _evaluate(target: TargetDensity, point: np.ndarray) -> float:
    """Budgeted target call; failures become the sentinel, budget intact.

    The target counts the evaluation before running it, so a raising or
    non-finite evaluation still spends its unit of budget. A -inf value is a
    genuine zero of the density and passes through; nan and +inf are failures.
    """
    try:
        value = float(target.log_q(point))
    except _EVALUATION_ERRORS as exc:
        warnings.warn(
            f"target evaluation failed at {np.asarray(point)}: {exc}",
            RuntimeWarning,
            stacklevel=2,
        )
        return LOG_DENSITY_SENTINEL
    if np.isnan(value) or value == np.inf:
        warnings.warn(
            f"target evaluation returned {value} at {np.asarray(point)}",
            RuntimeWarning,
            stacklevel=2,
        )
        return LOG_DENSITY_SENTINEL
    return value


class _Surrogate:
    """GP fit state across a run: raw evaluations, schedule, failure policy.

    Values are stored raw; every fit re-centers them by the running max of
    the successful ones before applying the link transform, so the training
    outputs top out at zero while the recorded ratios keep their offset. The
    outputs are deliberately not rescaled: on log-density data the variance
    ceiling of `MleConfig` then acts as a cap on the fitted signal variance,
    which keeps the posterior variance in coverage gaps at a few log-density
    units and sustains exploration. Fit failures warn and leave the previous
    posterior (and hyperparameters) in charge; with no posterior at all,
    scores fall back to a constant so the pool argmax degrades to lowest
    stream index.
    """

    def __init__(self, domain: Domain, config: BisConfig) -> None:
        self.config = config
        self.mle_config = MleConfig.from_domain(
            domain,
            noise_mode=config.noise_mode,
            noise_variance=config.noise_variance,
            restarts=config.mle_restarts,
        )
        self.points: list[np.ndarray] = []
        self.values: list[float] = []
        self.hyper: Hyperparameters | None = None
        self.posterior: GPPosterior | None = None
        self.step = 0
        if config.kernel_mode == "fixed":
            lengthscale, variance = config.fixed_kernel
            self.hyper = Hyperparameters(
                log_lengthscale=math.log(lengthscale),
                log_variance=math.log(variance),
            )

    def record(self, point: np.ndarray, value: float) -> bool:
        """Add an evaluation unless it sits within the merge radius of one."""
        point = np.asarray(point, dtype=float)
        if self.points:
            gaps = np.linalg.norm(np.asarray(self.points) - point, axis=1)
            if float(np.min(gaps)) <= _MERGE_RADIUS:
                return False
        self.points.append(point)
        self.values.append(float(value))
        return True

    def _usable(self) -> tuple[np.ndarray, np.ndarray]:
        values = np.asarray(self.values, dtype=float)
        mask = np.isfinite(values) & (values > LOG_DENSITY_SENTINEL)
        points = np.asarray(self.points, dtype=float)
        return points[mask], values[mask]

    def hyper_dict(self) -> dict | None:
        if self.hyper is None:
            return None
        return self.hyper.to_dict()

    def _default_hyper(self) -> Hyperparameters:
        low, high = self.mle_config.lengthscale_log_bounds
        return Hyperparameters(
            log_lengthscale=0.5 * (low + high), log_variance=0.0
        )

    def _posterior_for(
        self, hyper: Hyperparameters, training: TrainingSet
    ) -> tuple[Hyperparameters, GPPosterior]:
        kernel = hyper.kernel()
        noise = hyper.noise_variance(self.config.noise_variance)
        if self.config.mean_form == "quadratic":
            mean = profile_quadratic_mean(kernel, training, noise_variance=noise)
            hyper = replace(hyper, mean_coefficients=mean.coefficients)
        else:
            mean = MeanSpec()
        working = replace(training, noise_variance=noise)
        return hyper, fit(GPPrior(mean=mean, kernel=kernel), working)

    def refresh(self, seed: int) -> None:
        """Fit for the next selection step; never raises on fit failure."""
        self.step += 1
        points, values = self._usable()
        if points.shape[0] < 1:
            return
        center = float(np.max(values))
        outputs = np.asarray(
            transform_output(self.config.phi, values - center), dtype=float
        )
        training = TrainingSet(
            inputs=points,
            outputs=outputs,
            noise_variance=self.config.noise_variance,
        )
        scheduled = (self.step - 1) % self.config.refit_stride == 0
        try:
            if self.config.kernel_mode == "fixed":
                self.hyper, self.posterior = self._posterior_for(self.hyper, training)
            elif training.size < 2:
                self.hyper, self.posterior = self._posterior_for(
                    self._default_hyper(), training
                )
            elif scheduled or self.hyper is None:
                self.hyper, self.posterior = mle_fit(
                    training,
                    self.config.mean_form,
                    self.mle_config,
                    seed=seed,
                    fallback=self.hyper,
                )
            else:
                self.hyper, self.posterior = self._posterior_for(self.hyper, training)
        except GPFitError as exc:
            warnings.warn(
                f"surrogate fit failed, keeping previous state: {exc}",
                RuntimeWarning,
                stacklevel=2,
            )

    def scores(self, points: np.ndarray) -> np.ndarray:
        """Selection score per point: log upper bound for Exp, plain otherwise."""
        points = np.atleast_2d(points)
        if self.posterior is None:
            return np.zeros(points.shape[0])
        mean = np.empty(points.shape[0])
        var = np.empty(points.shape[0])
        for start in range(0, points.shape[0], _POOL_CHUNK):
            block = slice(start, start + _POOL_CHUNK)
            mean[block] = self.posterior.predict_mean(points[block])
            var[block] = self.posterior.predict_var(points[block])
        if self.config.phi is Phi.EXP:
            return ujb_log(mean, var)
        return ujb(mean, var, self.config.phi)


class _RunLog:
    """Accumulates evaluations and trace rows for one run."""

    def __init__(self, log_u: float) -> None:
        self.log_u = log_u
        self.start_time = time.perf_counter()
        self.points: list[np.ndarray] = []
        self.values: list[float] = []
        self.stream_indices: list[int] = []
        self.trace: list[IterationRecord] = []

    def add(
        self,
        point: np.ndarray,
        value: float,
        stream_index: int | None,
        kind: str,
        acquisition: float | None,
        hyperparameters: dict | None,
    ) -> None:
        self.points.append(np.asarray(point, dtype=float))
        self.values.append(value)
        self.stream_indices.append(-1 if stream_index is None else stream_index)
        self.trace.append(
            IterationRecord(
                n=len(self.points),
                kind=kind,
                stream_index=stream_index,
                point=tuple(float(c) for c in np.asarray(point)),
                log_q=value,
                acquisition=acquisition,
                hyperparameters=hyperparameters,
                elapsed=time.perf_counter() - self.start_time,
            )
        )

    def finalize(self, pool: CandidatePool | None) -> WeightedSampleSet:
        values = np.asarray(self.values, dtype=float)
        live = (values > LOG_DENSITY_SENTINEL) | np.isneginf(values)
        ratios = np.where(live, values - self.log_u, LOG_DENSITY_SENTINEL)
        return WeightedSampleSet(
            points=np.asarray(self.points, dtype=float),
            log_ratios=ratios,
            weights=self_normalize(ratios),
            stream_indices=np.asarray(self.stream_indices, dtype=np.int64),
            trace=tuple(self.trace),
            log_u=self.log_u,
            pool_points=None if pool is None else pool.points.copy(),
            pool_stream_indices=(
                None if pool is None else pool.stream_indices.copy()
            ),
        )


def _start_run(
    target: TargetDensity, stream: ProposalStream | None
) -> tuple[ProposalStream, _RunLog]:
    if stream is None:
        stream = HaltonStream(target.domain.dim)
    if stream.dim != target.domain.dim:
        raise ValueError(
            f"stream dimension {stream.dim} does not match domain "
            f"dimension {target.domain.dim}"
        )
    return stream, _RunLog(log_u=-math.log(target.domain.volume))


def _consume_stream(
    target: TargetDensity,
    stream: ProposalStream,
    log: _RunLog,
    count: int,
    surrogate: _Surrogate | None,
) -> None:
    indices = np.arange(stream.cursor, stream.cursor + count)
    points = scale_to_domain(stream.take(count), target.domain)
    for point, index in zip(points, indices):
        value = _evaluate(target, point)
        if surrogate is not None:
            surrogate.record(point, value)
        log.add(point, value, int(index), "stream", None, None)


def _iteration_seeds(config: BisConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    return rng.integers(0, 2**63, size=config.n_total, dtype=np.int64)


def standard_is(
    target: TargetDensity, n_points: int, stream: ProposalStream | None = None
) -> WeightedSampleSet:
    """Self-normalized importance sampling on the first `n_points` stream points."""
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    stream, log = _start_run(target, stream)
    _consume_stream(target, stream, log, n_points, None)
    return log.finalize(None)


def bis_run(
    target: TargetDensity, config: BisConfig, stream: ProposalStream | None = None
) -> WeightedSampleSet:
    """Surrogate-guided run: initial stream points, then pool argmax selections.

    The first `initial_count` points come straight off the stream; the pool is
    the next `pool_size` points. Every remaining unit of budget goes to the
    pool point maximizing the upper-Jensen-bound score under the current GP,
    with the evaluated point swapped out for the next stream point. Exactly
    `n_total` target evaluations occur, and the returned sample indices plus
    the final pool indices tile the first pool_size + n_total stream
    positions.
    """
    stream, log = _start_run(target, stream)
    surrogate = _Surrogate(target.domain, config)
    seeds = _iteration_seeds(config)

    _consume_stream(target, stream, log, config.initial_count, surrogate)
    pool = CandidatePool.initialize(
        target.domain, stream, config.pool_size, log.log_u
    )

    for step in range(config.initial_count, config.n_total):
        surrogate.refresh(seed=int(seeds[step]))
        scores = surrogate.scores(pool.points)
        position = int(np.argmax(scores))
        acquisition = float(scores[position])
        point, index = pool.swap(position)
        value = _evaluate(target, point)
        surrogate.record(point, value)
        log.add(point, value, index, "ujb", acquisition, surrogate.hyper_dict())

    return log.finalize(pool)


def _maximize_score(
    surrogate: _Surrogate,
    domain: Domain,
    pool: CandidatePool,
    pool_scores: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Best of several bounded simplex ascents seeded at top pool candidates.

    The ascent never returns worse than its seed, and the seeds include the
    pool argmax, so the continuous maximizer dominates the pool maximum.
    """
    order = np.argsort(pool_scores)[::-1]
    starts = pool.points[order[: min(_ASCENT_STARTS, pool.size)]]
    bounds = list(zip(domain.lower, domain.upper))

    def negative_score(x: np.ndarray) -> float:
        return -float(surrogate.scores(np.atleast_2d(x))[0])

    best_point = starts[0]
    best_value = negative_score(starts[0])
    for start in starts:
        result = optimize.minimize(
            negative_score,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": _ASCENT_MAX_ITER, "xatol": 1e-6, "fatol": 1e-9},
        )
        if result.fun < best_value:
            best_value = float(result.fun)
            best_point = np.asarray(result.x, dtype=float)
    return best_point, -best_value


def randomized_bo_is(
    target: TargetDensity, config: BisConfig, stream: ProposalStream | None = None
) -> WeightedSampleSet:
    """Optimizer-driven baseline: continuous ascents alternating with stream points.

    After the initial phase, each iteration spends two evaluations: the
    continuous-domain maximizer of the selection score (no pool restriction
    and no revisit guard, so late iterations pile onto the mode) and the
    lowest-index pool point, backfilled from the stream. Points landing
    within the merge radius of an earlier evaluation still consume budget and
    enter the sample set but stay out of surrogate training. An odd
    post-initial budget is closed with one extra stream point, so exactly
    `n_total` evaluations occur here too.
    """
    stream, log = _start_run(target, stream)
    surrogate = _Surrogate(target.domain, config)
    seeds = _iteration_seeds(config)

    _consume_stream(target, stream, log, config.initial_count, surrogate)
    pool = CandidatePool.initialize(
        target.domain, stream, config.pool_size, log.log_u
    )

    leftover = config.n_total - config.initial_count
    for step in range(leftover // 2):
        surrogate.refresh(seed=int(seeds[config.initial_count + step]))
        pool_scores = surrogate.scores(pool.points)
        ascent_point, ascent_score = _maximize_score(
            surrogate, target.domain, pool, pool_scores
        )
        value = _evaluate(target, ascent_point)
        surrogate.record(ascent_point, value)
        log.add(
            ascent_point, value, None, "ascent", ascent_score, surrogate.hyper_dict()
        )

        point, index = pool.swap(0)
        value = _evaluate(target, point)
        surrogate.record(point, value)
        log.add(point, value, index, "stream", None, surrogate.hyper_dict())

    if leftover % 2 == 1:
        point, index = pool.swap(0)
        value = _evaluate(target, point)
        surrogate.record(point, value)
        log.add(point, value, index, "stream", None, surrogate.hyper_dict())

    return log.finalize(pool)
