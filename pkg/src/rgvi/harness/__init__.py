"""Experiment configs, trace files, rate fits, the acceptance suite and the CLI."""

from .acceptance import AcceptanceReport, CriterionResult, acceptance_suite
from .config import ExperimentConfig, dump_config, load_config, parse_config
from .experiment import CSV_COLUMNS, RateFit, fit_rate, read_trace_csv, run_experiment, write_trace_csv
