"""Experiment orchestration: references, seed sweeps, studies, plot data.

A run record is a plain JSON-serializable dict. Everything stochastic keys
off the config and the sweep seed, so rerunning a config reproduces every
artifact bit for bit apart from timestamps; aggregates stored in the record
are recomputable from the per-seed rows.
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .. import __version__
from ..acquisition import Phi
from ..gp import GPPrior, KernelSpec, MeanSpec, MleConfig, TrainingSet, fit, mle_fit, profile_quadratic_mean
from ..lowdisc import HaltonStream, scale_to_domain
from ..metrics import (
    MmdKernel,
    kde_evaluate,
    mmd,
    mmd_self_term,
    silverman_bandwidth,
    tvd_numeric,
)
from ..sampler import WeightedSampleSet, bis_run, randomized_bo_is, standard_is
from ..targets import LOG_DENSITY_SENTINEL, TargetDensity
from .config import METHOD_LABELS, ExperimentConfig, TargetSpec, make_target
from .io import (
    SCHEMA_VERSION,
    read_samples_csv,
    write_plot_csv,
    write_run_record,
    write_samples_csv,
    write_trace_jsonl,
)

# Study grids, as published (the pool grid's 8196 included).
PHI_GRID = (Phi.EXP, Phi.RELU, Phi.SQUARE)
POOL_GRID = (2, 8, 32, 128, 512, 2048, 8196, 32768)

_RUNNERS = {
    "bis": lambda target, cfg: bis_run(target, cfg),
    "standard_is": lambda target, cfg: standard_is(target, cfg.n_total),
    "randomized_bo": lambda target, cfg: randomized_bo_is(target, cfg),
}


def _reference_path(cache_dir: Path, key: str, count: int) -> Path:
    return Path(cache_dir) / "references" / f"{key}-n{count}.npz"


def _self_term_path(cache_dir: Path, key: str, count: int, bandwidth: float) -> Path:
    name = f"{key}-n{count}-h{bandwidth:g}.json"
    return Path(cache_dir) / "references" / name


def _as_sample_set(
    points: np.ndarray, log_ratios: np.ndarray, weights: np.ndarray, log_u: float
) -> WeightedSampleSet:
    return WeightedSampleSet(
        points=points,
        log_ratios=log_ratios,
        weights=weights,
        stream_indices=np.arange(1, points.shape[0] + 1, dtype=np.int64),
        trace=(),
        log_u=log_u,
    )


def build_reference(
    target: TargetDensity,
    count: int,
    cache_dir: Path,
    seed: int = 0,
    final_n: int | None = None,
) -> WeightedSampleSet:
    """Dense plain-IS run cached by (target identity, count).

    The proposal stream is the deterministic Halton sequence, so the file is
    bitwise reproducible; `seed` is kept for stochastic targets whose own
    replicate streams key off their construction, not off this argument. A
    cache file that fails to load is rebuilt in place.
    """
    if count < 1:
        raise ValueError("reference count must be positive")
    if final_n is not None and count < 10 * final_n:
        raise ValueError("reference count must be at least 10x the budget it scores")
    path = _reference_path(cache_dir, target.cache_key, count)
    log_u = -float(np.log(target.domain.volume))
    if path.exists():
        try:
            stored = np.load(path)
            return _as_sample_set(
                stored["points"], stored["log_ratios"], stored["weights"], log_u
            )
        except Exception as error:  # corrupt cache: rebuild below
            warnings.warn(
                f"reference cache {path} unreadable ({error}), rebuilding",
                RuntimeWarning,
                stacklevel=2,
            )
    run = standard_is(target, count)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, points=run.points, log_ratios=run.log_ratios, weights=run.weights)
    return _as_sample_set(run.points, run.log_ratios, run.weights, log_u)


def reference_self_term(
    reference: WeightedSampleSet,
    kernel: MmdKernel,
    cache_dir: Path,
    key: str,
    count: int,
) -> float:
    """Cached w'Kw of the reference, the dominant repeated MMD cost."""
    path = _self_term_path(cache_dir, key, count, kernel.bandwidth)
    if path.exists():
        try:
            stored = json.loads(path.read_text())
            if stored["schema_version"] == SCHEMA_VERSION:
                return float(stored["value"])
        except Exception as error:
            warnings.warn(
                f"self-term cache {path} unreadable ({error}), rebuilding",
                RuntimeWarning,
                stacklevel=2,
            )
    value = mmd_self_term(reference, kernel)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps({"schema_version": SCHEMA_VERSION, "value": value}) + "\n"
    )
    return value


def checkpoint_schedule(n_total: int, n_initial: int) -> list[int]:
    """Budgets at which the anytime estimate is scored: every N0, plus N."""
    marks = list(range(n_initial, n_total + 1, n_initial))
    if marks[-1] != n_total:
        marks.append(n_total)
    return marks


def _plugin_log_density(
    run: WeightedSampleSet, target: TargetDensity, sampler_cfg, seed: int
):
    """Log density of the plug-in GP surface refit on the run's evaluations."""
    if sampler_cfg.phi is not Phi.EXP:
        raise ValueError("plug-in TVD is defined for the Exp link only")
    values = run.log_ratios + run.log_u
    mask = np.isfinite(values) & (values > LOG_DENSITY_SENTINEL)
    points, values = run.points[mask], values[mask]
    training = TrainingSet(
        inputs=points,
        outputs=values - float(np.max(values)),
        noise_variance=sampler_cfg.noise_variance,
    )
    if sampler_cfg.kernel_mode == "fixed":
        lengthscale, variance = sampler_cfg.fixed_kernel
        kernel = KernelSpec(lengthscale, variance)
        if sampler_cfg.mean_form == "quadratic":
            mean = profile_quadratic_mean(
                kernel, training, noise_variance=sampler_cfg.noise_variance
            )
        else:
            mean = MeanSpec()
        posterior = fit(GPPrior(mean=mean, kernel=kernel), training)
    else:
        _, posterior = mle_fit(
            training,
            sampler_cfg.mean_form,
            MleConfig.from_domain(
                target.domain,
                noise_mode=sampler_cfg.noise_mode,
                noise_variance=sampler_cfg.noise_variance,
                restarts=sampler_cfg.mle_restarts,
            ),
            seed=seed,
        )
    return lambda nodes: posterior.predict_mean(nodes)


def run_experiment(config: ExperimentConfig) -> dict:
    """Execute the config's seed sweep and persist one run record.

    Per seed: build (or load) the reference, run the method, check the
    budget, score the MMD curve at every checkpoint, optionally score the
    plug-in GP TVD, and write the trace and sample files. Seeds that raise
    are recorded as failures and left out of the aggregates, with a warning.
    """
    kernel = MmdKernel(config.metrics.mmd_bandwidth)
    marks = checkpoint_schedule(
        config.sampler.n_total, config.sampler.initial_count
    )
    run_dir = config.out_dir / config.label
    rows: list[dict] = []
    for seed in config.seeds:
        started = time.perf_counter()
        try:
            ref_target = make_target(config.target, config.cache_dir, seed)
            reference = build_reference(
                ref_target,
                config.reference.count,
                config.cache_dir,
                config.reference.seed,
                final_n=config.sampler.n_total,
            )
            second_self = reference_self_term(
                reference,
                kernel,
                config.cache_dir,
                ref_target.cache_key,
                config.reference.count,
            )
            target = make_target(config.target, config.cache_dir, seed)
            sampler_cfg = config.sampler_for_seed(seed)
            run = _RUNNERS[config.method](target, sampler_cfg)
            if target.eval_count != sampler_cfg.n_total:
                raise RuntimeError(
                    f"budget violation: {target.eval_count} evaluations "
                    f"for a budget of {sampler_cfg.n_total}"
                )
            curve = [
                mmd(run.prefix(mark), reference, kernel, second_self=second_self)
                for mark in marks
            ]
            final_tvd = None
            if config.metrics.tvd_nodes > 0:
                plugin = _plugin_log_density(run, target, sampler_cfg, seed)
                final_tvd = tvd_numeric(
                    plugin,
                    target.log_q_batch,
                    target.domain,
                    config.metrics.tvd_nodes,
                )
            seed_dir = run_dir / f"seed-{seed}"
            write_samples_csv(seed_dir / "samples.csv", run)
            write_trace_jsonl(seed_dir / "trace.jsonl", run.trace)
            rows.append(
                {
                    "seed": seed,
                    "error": None,
                    "eval_count": target.eval_count,
                    "mmd_curve": curve,
                    "final_mmd": curve[-1],
                    "final_tvd": final_tvd,
                    "effective_sample_size": run.effective_sample_size(),
                    "samples_path": str(seed_dir / "samples.csv"),
                    "trace_path": str(seed_dir / "trace.jsonl"),
                    "elapsed": time.perf_counter() - started,
                }
            )
        except Exception as error:
            warnings.warn(
                f"seed {seed} failed: {error}", RuntimeWarning, stacklevel=2
            )
            rows.append(
                {
                    "seed": seed,
                    "error": f"{type(error).__name__}: {error}",
                    "eval_count": None,
                    "mmd_curve": None,
                    "final_mmd": None,
                    "final_tvd": None,
                    "effective_sample_size": None,
                    "samples_path": None,
                    "trace_path": None,
                    "elapsed": time.perf_counter() - started,
                }
            )
    record = {
        "schema_version": SCHEMA_VERSION,
        "label": config.label,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "package_version": __version__,
        "config": config.to_dict(),
        "checkpoints": marks,
        "seeds": rows,
        "aggregate": aggregate_rows(rows, marks),
    }
    write_run_record(run_dir / "record.json", record)
    return record


def aggregate_rows(rows: list[dict], marks: list[int]) -> dict:
    """Mean and normal-approximation 95% band per checkpoint, plus finals."""
    curves = [row["mmd_curve"] for row in rows if row["error"] is None]
    failed = sum(1 for row in rows if row["error"] is not None)
    if not curves:
        return {
            "completed": len(rows) - failed,
            "failed": failed,
            "mmd_mean": None,
            "mmd_lo": None,
            "mmd_hi": None,
            "final_mmd_mean": None,
            "final_mmd_median": None,
        }
    stacked = np.asarray(curves, dtype=float)
    mean = stacked.mean(axis=0)
    if stacked.shape[0] > 1:
        half = 1.96 * stacked.std(axis=0, ddof=1) / np.sqrt(stacked.shape[0])
    else:
        half = np.zeros(len(marks))
    return {
        "completed": len(rows) - failed,
        "failed": failed,
        "mmd_mean": mean.tolist(),
        "mmd_lo": (mean - half).tolist(),
        "mmd_hi": (mean + half).tolist(),
        "final_mmd_mean": float(mean[-1]),
        "final_mmd_median": float(np.median(stacked[:, -1])),
    }


def samples_to_match(
    target: TargetDensity,
    reference: WeightedSampleSet,
    kernel: MmdKernel,
    error_target: float,
    max_n: int,
    *,
    second_self: float | None = None,
) -> int:
    """Smallest plain-IS budget whose MMD beats `error_target`, else max_n+1.

    One Halton stream is scored incrementally: the weighted kernel sums grow
    by one row per budget unit, so the whole prefix curve costs one pass over
    the stream-reference cross kernel plus a triangular self sum. Evaluations
    here are a diagnostic against an already-built reference and bypass the
    budget counter.
    """
    if error_target <= 0:
        raise ValueError("error_target must be positive")
    if max_n < 1:
        raise ValueError("max_n must be positive")
    points = scale_to_domain(
        HaltonStream(target.domain.dim).take(max_n), target.domain
    )
    values = np.asarray(target.log_q_batch(points), dtype=float).ravel()
    live = (values > LOG_DENSITY_SENTINEL) & ~np.isnan(values)
    if not np.any(live):
        return max_n + 1
    shift = float(np.max(values[live]))
    masses = np.where(live, np.exp(values - shift), 0.0)

    if second_self is None:
        second_self = mmd_self_term(reference, kernel)
    ref_points = reference.points
    ref_weights = reference.weights
    cross = np.zeros(max_n)
    for start in range(0, ref_points.shape[0], 2048):
        block = slice(start, start + 2048)
        cross += kernel.matrix(points, ref_points[block]) @ ref_weights[block]

    lower = np.zeros(max_n)
    for start in range(0, max_n, 2048):
        stop = min(start + 2048, max_n)
        gram = kernel.matrix(points[start:stop], points[:stop])
        for row in range(start, stop):
            lower[row] = gram[row - start, :row] @ masses[:row]

    mass_total = np.cumsum(masses)
    self_sum = np.cumsum(2.0 * masses * lower + np.square(masses))
    cross_sum = np.cumsum(masses * cross)
    with np.errstate(divide="ignore", invalid="ignore"):
        squared = (
            self_sum / np.square(mass_total)
            - 2.0 * cross_sum / mass_total
            + second_self
        )
    squared = np.where(mass_total > 0, np.maximum(squared, 0.0), np.inf)
    matched = np.flatnonzero(np.sqrt(squared) <= error_target)
    return int(matched[0]) + 1 if matched.size else max_n + 1


def _study(config: ExperimentConfig, cells: list[tuple[str, ExperimentConfig]], out_name: str) -> list[dict]:
    records = []
    for cell, sub in cells:
        record = run_experiment(sub)
        record["cell"] = cell
        records.append(record)
    table = config.out_dir / out_name
    table.parent.mkdir(parents=True, exist_ok=True)
    with table.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(handle)
        writer.writerow(["cell", "final_mmd_mean", "final_mmd_median", "completed"])
        for record in records:
            aggregate = record["aggregate"]
            writer.writerow(
                [
                    record["cell"],
                    aggregate["final_mmd_mean"],
                    aggregate["final_mmd_median"],
                    aggregate["completed"],
                ]
            )
    return records


def phi_study(config: ExperimentConfig) -> list[dict]:
    """One record per link family, plus a comparison table CSV."""
    cells = []
    for phi in PHI_GRID:
        sub = replace(
            config,
            sampler=replace(config.sampler, phi=phi),
            label=f"{config.label}-phi-{phi.value}",
        )
        cells.append((phi.value, sub))
    return _study(config, cells, f"{config.label}-phi-study.csv")


def pool_size_study(
    config: ExperimentConfig, grid: Iterable[int] = POOL_GRID
) -> list[dict]:
    """One record per pool size, plus a comparison table CSV."""
    cells = []
    for pool_size in grid:
        sub = replace(
            config,
            sampler=replace(config.sampler, pool_size=pool_size),
            label=f"{config.label}-pool-{pool_size}",
        )
        cells.append((str(pool_size), sub))
    return _study(config, cells, f"{config.label}-pool-study.csv")


def emit_plot_data(records: list[dict], path: Path) -> Path:
    """Merged per-checkpoint trace columns: N, then mean/lo/hi per method."""
    if not records:
        raise ValueError("need at least one run record")
    marks = records[0]["checkpoints"]
    columns: dict[str, np.ndarray] = {"N": np.asarray(marks, dtype=float)}
    used: set[str] = set()
    for record in records:
        if record["checkpoints"] != marks:
            raise ValueError("records disagree on checkpoint schedule")
        aggregate = record["aggregate"]
        if aggregate["mmd_mean"] is None:
            raise ValueError(f"record {record['label']} carries no MMD curve")
        prefix = METHOD_LABELS[record["config"]["method"]]
        if prefix in used:
            prefix = f"{prefix}_{record['label']}"
        used.add(prefix)
        columns[f"{prefix}_mean"] = np.asarray(aggregate["mmd_mean"])
        columns[f"{prefix}_lo"] = np.asarray(aggregate["mmd_lo"])
        columns[f"{prefix}_hi"] = np.asarray(aggregate["mmd_hi"])
    write_plot_csv(path, columns)
    return Path(path)


def emit_kde_grid(
    record: dict, path: Path, resolution: int = 64
) -> Path | None:
    """Density-comparison grid for two-dimensional targets.

    Columns: grid coordinates, reference KDE, and the method's KDE from the
    first completed seed. Returns None for other dimensionalities.
    """
    config = record["config"]
    spec = TargetSpec(**config["target"])
    completed = [row for row in record["seeds"] if row["error"] is None]
    if not completed:
        raise ValueError("record has no completed seeds")
    target = make_target(spec, Path(config["cache_dir"]), completed[0]["seed"])
    if target.domain.dim != 2:
        return None
    points, _, weights = read_samples_csv(completed[0]["samples_path"])
    reference = build_reference(
        make_target(spec, Path(config["cache_dir"]), completed[0]["seed"]),
        config["reference"]["count"],
        Path(config["cache_dir"]),
        config["reference"]["seed"],
    )
    axes = [
        np.linspace(target.domain.lower[axis], target.domain.upper[axis], resolution)
        for axis in range(2)
    ]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    run_band = silverman_bandwidth((points, weights))
    ref_band = silverman_bandwidth(reference)
    prefix = METHOD_LABELS[config["method"]]
    write_plot_csv(
        path,
        {
            "theta_0": mesh[:, 0],
            "theta_1": mesh[:, 1],
            "reference_density": kde_evaluate(reference, ref_band, mesh),
            f"{prefix}_density": kde_evaluate((points, weights), run_band, mesh),
        },
    )
    return Path(path)
