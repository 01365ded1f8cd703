"""Experiment harness: configs, sweeps, result files and the CLI."""
from .config import ExperimentConfig, PreconditionerConfig, load_config, parse_beta2
from .runner import (
    RunRecord, compare_to_reference, emit_results, load_reference, load_results, run_single,
    run_table,
)

__all__ = [
    "ExperimentConfig", "PreconditionerConfig", "RunRecord", "compare_to_reference",
    "emit_results", "load_config", "load_reference", "load_results", "parse_beta2",
    "run_single", "run_table",
]
