"""Robust joint time, power and energy-beam allocation."""

from .beam import candidate_beams, dominant_directions, refine_beam, search_beam, simplex_weights
from .inner import WaterFill, allocate_time_maxmin, allocate_time_sum, user_rate, waterfill
from .kkt import RESIDUAL_NAMES, policy_residuals, verify_kkt
from .model import DesignModel, design_scenario, mode_gains
from .solver import (
    baseline_solve,
    build_model,
    evaluate_policy,
    optimize_beam,
    sca_solve_fixed_tau0,
    solve,
    solve_fixed_tau0,
)
from .types import CSI_SCORING, OBJECTIVES, SCHEMES, AllocationPolicy, SolveReport, SolverOptions

__all__ = [
    "AllocationPolicy",
    "SolveReport",
    "SolverOptions",
    "SCHEMES",
    "OBJECTIVES",
    "CSI_SCORING",
    "WaterFill",
    "waterfill",
    "user_rate",
    "allocate_time_sum",
    "allocate_time_maxmin",
    "DesignModel",
    "design_scenario",
    "mode_gains",
    "build_model",
    "dominant_directions",
    "simplex_weights",
    "candidate_beams",
    "refine_beam",
    "search_beam",
    "optimize_beam",
    "solve_fixed_tau0",
    "sca_solve_fixed_tau0",
    "solve",
    "evaluate_policy",
    "baseline_solve",
    "verify_kkt",
    "policy_residuals",
    "RESIDUAL_NAMES",
]
