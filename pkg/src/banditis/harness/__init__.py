"""Experiment orchestration: configs, persistence, runners, CLI."""

from .config import (
    GANDK_THETA_TRUE,
    METHOD_LABELS,
    METHODS,
    TARGETS,
    ExperimentConfig,
    MatchSpec,
    MetricSpec,
    ReferenceSpec,
    TargetSpec,
    config_from_dict,
    load_config,
    make_target,
)
from .io import (
    SCHEMA_VERSION,
    read_plot_csv,
    read_run_record,
    read_samples_csv,
    read_trace_jsonl,
    write_plot_csv,
    write_run_record,
    write_samples_csv,
    write_trace_jsonl,
)
from .runner import (
    PHI_GRID,
    POOL_GRID,
    aggregate_rows,
    build_reference,
    checkpoint_schedule,
    emit_kde_grid,
    emit_plot_data,
    phi_study,
    pool_size_study,
    reference_self_term,
    run_experiment,
    samples_to_match,
)

__all__ = [
    "GANDK_THETA_TRUE",
    "METHOD_LABELS",
    "METHODS",
    "PHI_GRID",
    "POOL_GRID",
    "SCHEMA_VERSION",
    "TARGETS",
    "ExperimentConfig",
    "MatchSpec",
    "MetricSpec",
    "ReferenceSpec",
    "TargetSpec",
    "aggregate_rows",
    "build_reference",
    "checkpoint_schedule",
    "config_from_dict",
    "emit_kde_grid",
    "emit_plot_data",
    "load_config",
    "make_target",
    "phi_study",
    "pool_size_study",
    "read_plot_csv",
    "read_run_record",
    "read_samples_csv",
    "read_trace_jsonl",
    "reference_self_term",
    "run_experiment",
    "samples_to_match",
    "write_plot_csv",
    "write_run_record",
    "write_samples_csv",
    "write_trace_jsonl",
]
