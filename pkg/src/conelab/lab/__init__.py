"""Configuration, checks and experiment orchestration."""

from .checks import (Check, VerifyReport, density_check, left_surrogate, normalize,
                     stress_field, w1delta_verify)
from .config import KINDS, SCHEMA, ExperimentConfig, load_config, parse_config
from .fixtures import Fixture, build_fixture, solve_problem
from .runner import EXIT_ERROR, EXIT_FAILED, EXIT_OK, execute, run_experiment
from .suite import builtin_suite

__all__ = [
    "Check", "VerifyReport", "density_check", "left_surrogate", "normalize", "stress_field",
    "w1delta_verify", "KINDS", "SCHEMA", "ExperimentConfig", "load_config", "parse_config",
    "Fixture", "build_fixture", "solve_problem", "EXIT_ERROR", "EXIT_FAILED", "EXIT_OK",
    "execute", "run_experiment", "builtin_suite",
]
