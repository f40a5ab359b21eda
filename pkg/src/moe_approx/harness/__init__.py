"""Experiment harness: drivers, serialization, figures, and the CLI."""

from .experiments import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    ReportBundle,
    audit_grid,
    build_construction,
    end_to_end_error,
    error_grid,
    experiment_config,
    gadget_bit_checks,
    routing_audit,
    run_experiment,
)
from .io import (
    CSV_HEADER,
    FORMAT_VERSION,
    load_config,
    load_network,
    read_sweep_csv,
    save_network,
    write_sweep_csv,
)

__all__ = [
    "EXPERIMENT_KINDS",
    "ExperimentConfig",
    "ReportBundle",
    "audit_grid",
    "build_construction",
    "end_to_end_error",
    "error_grid",
    "experiment_config",
    "gadget_bit_checks",
    "routing_audit",
    "run_experiment",
    "CSV_HEADER",
    "FORMAT_VERSION",
    "load_config",
    "load_network",
    "read_sweep_csv",
    "save_network",
    "write_sweep_csv",
]
