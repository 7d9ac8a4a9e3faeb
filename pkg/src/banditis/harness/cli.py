"""Command-line front end for configured experiment runs.

Every verb reads one TOML config; shared flags override the loaded values
before anything executes. Verbs only orchestrate: the work lives in
`runner`, and all outputs are the versioned JSON/CSV artifacts it writes.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..metrics import MmdKernel
from .config import METHODS, ExperimentConfig, load_config, make_target
from .io import SCHEMA_VERSION, read_run_record
from .runner import (
    build_reference,
    emit_kde_grid,
    emit_plot_data,
    phi_study,
    pool_size_study,
    reference_self_term,
    run_experiment,
    samples_to_match,
)

_VERBS = (
    "run",
    "reference",
    "match-count",
    "study-phi",
    "study-pool",
    "emit-plots",
    "validate-config",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditis",
        description="Budgeted importance sampling experiment runner.",
    )
    parser.add_argument("verb", choices=_VERBS)
    parser.add_argument(
        "--config", required=True, type=Path, help="TOML experiment config"
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="replace the config's seed list"
    )
    parser.add_argument(
        "--out", type=Path, default=None, help="override the output directory"
    )
    parser.add_argument(
        "--threads", type=int, default=None, help="thread cap for compiled kernels"
    )
    parser.add_argument(
        "--refit-stride",
        type=int,
        default=None,
        help="override the hyperparameter refresh stride",
    )
    parser.add_argument(
        "--replicates",
        type=int,
        default=None,
        help="override the target's simulation replicate count",
    )
    return parser


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        config = replace(config, seeds=(args.seed,))
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    if args.refit_stride is not None:
        config = replace(
            config, sampler=replace(config.sampler, refit_stride=args.refit_stride)
        )
    if args.replicates is not None:
        config = replace(
            config, target=replace(config.target, replicates=args.replicates)
        )
    return config


def _describe(config: ExperimentConfig) -> str:
    return (
        f"label={config.label} target={config.target.name} "
        f"method={config.method} N={config.sampler.n_total} "
        f"M={config.sampler.pool_size} seeds={list(config.seeds)}"
    )


def _cmd_run(config: ExperimentConfig) -> int:
    record = run_experiment(config)
    aggregate = record["aggregate"]
    print(f"run complete: {_describe(config)}")
    print(
        f"completed={aggregate['completed']} failed={aggregate['failed']} "
        f"final_mmd_mean={aggregate['final_mmd_mean']}"
    )
    print(f"record: {config.out_dir / config.label / 'record.json'}")
    return 0


def _cmd_reference(config: ExperimentConfig) -> int:
    seed = config.seeds[0]
    target = make_target(config.target, config.cache_dir, seed)
    reference = build_reference(
        target, config.reference.count, config.cache_dir, config.reference.seed
    )
    print(
        f"reference ready: target={config.target.name} "
        f"count={reference.points.shape[0]}"
    )
    return 0


def _cmd_match_count(config: ExperimentConfig) -> int:
    """Per-seed plain-IS budgets that match a finished run's final MMD."""
    record_path = config.out_dir / config.label / "record.json"
    if not record_path.exists():
        print(f"no run record at {record_path}; run the config first", file=sys.stderr)
        return 2
    record = read_run_record(record_path)
    kernel = MmdKernel(config.metrics.mmd_bandwidth)
    counts = []
    out_path = config.out_dir / config.label / "match-counts.csv"
    with out_path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(handle)
        writer.writerow(["seed", "error_target", "match_count"])
        for row in record["seeds"]:
            if row["error"] is not None or row["final_mmd"] is None:
                continue
            target = make_target(config.target, config.cache_dir, row["seed"])
            reference = build_reference(
                target, config.reference.count, config.cache_dir, config.reference.seed
            )
            second_self = reference_self_term(
                kernel=kernel,
                reference=reference,
                cache_dir=config.cache_dir,
                key=target.cache_key,
                count=config.reference.count,
            )
            count = samples_to_match(
                make_target(config.target, config.cache_dir, row["seed"]),
                reference,
                kernel,
                row["final_mmd"],
                config.match.max_n,
                second_self=second_self,
            )
            counts.append(count)
            writer.writerow([row["seed"], row["final_mmd"], count])
            print(f"seed {row['seed']}: match_count={count}")
    if not counts:
        print("record holds no completed seeds", file=sys.stderr)
        return 2
    print(f"mean match_count={np.mean(counts):.1f} over {len(counts)} seeds")
    print(f"table: {out_path}")
    return 0


def _cmd_study(config: ExperimentConfig, study) -> int:
    records = study(config)
    for record in records:
        print(
            f"{record['cell']}: final_mmd_mean="
            f"{record['aggregate']['final_mmd_mean']}"
        )
    return 0


def _cmd_emit_plots(config: ExperimentConfig) -> int:
    """Merge whichever sibling method records exist into plot CSVs."""
    records = []
    for method in METHODS:
        path = config.out_dir / f"{config.target.name}-{method}" / "record.json"
        if path.exists():
            records.append(read_run_record(path))
    if not records:
        print(f"no run records under {config.out_dir}", file=sys.stderr)
        return 2
    trace_path = emit_plot_data(
        records, config.out_dir / f"{config.target.name}-trace.csv"
    )
    print(f"trace data: {trace_path}")
    for record in records:
        if record["config"]["method"] != "bis":
            continue
        grid_path = emit_kde_grid(
            record, config.out_dir / f"{config.target.name}-kde.csv"
        )
        if grid_path is not None:
            print(f"kde grid: {grid_path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        import numba

        numba.set_num_threads(args.threads)
    try:
        config = _apply_overrides(load_config(args.config), args)
    except (OSError, ValueError, KeyError, TypeError) as error:
        print(f"config error: {error}", file=sys.stderr)
        return 2
    if args.verb == "validate-config":
        print(f"config ok: {_describe(config)}")
        return 0
    if args.verb == "run":
        return _cmd_run(config)
    if args.verb == "reference":
        return _cmd_reference(config)
    if args.verb == "match-count":
        return _cmd_match_count(config)
    if args.verb == "study-phi":
        return _cmd_study(config, phi_study)
    if args.verb == "study-pool":
        return _cmd_study(config, pool_size_study)
    return _cmd_emit_plots(config)


if __name__ == "__main__":
    raise SystemExit(main())
