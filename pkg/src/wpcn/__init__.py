"""Robust resource allocation for MIMO wireless-powered communication networks."""

from .eh_model import EhParams, harvest_derivative, harvest_linear, harvest_nonlinear, sca_upper_bound
from .config import ConfigError, ScenarioConfig
from .channel import Scenario, UserChannel, generate_scenario
from .kernels import BACKEND_NAME
from .allocator import (
    AllocationPolicy,
    SolveReport,
    SolverOptions,
    baseline_solve,
    evaluate_policy,
    sca_solve_fixed_tau0,
    solve,
    solve_fixed_tau0,
    verify_kkt,
    waterfill,
)
from .simulator import SweepSpec, run_sweep, summarize

__version__ = "0.1.0"

__all__ = [
    "EhParams",
    "harvest_nonlinear",
    "harvest_linear",
    "harvest_derivative",
    "sca_upper_bound",
    "ConfigError",
    "ScenarioConfig",
    "Scenario",
    "UserChannel",
    "generate_scenario",
    "BACKEND_NAME",
    "AllocationPolicy",
    "SolveReport",
    "SolverOptions",
    "solve",
    "solve_fixed_tau0",
    "sca_solve_fixed_tau0",
    "baseline_solve",
    "evaluate_policy",
    "verify_kkt",
    "waterfill",
    "SweepSpec",
    "run_sweep",
    "summarize",
]
