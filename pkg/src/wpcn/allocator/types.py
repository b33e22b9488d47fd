"""Value types shared by the allocator, the simulator and the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np

from ..config import ConfigError

SCHEMES = ("proposed", "linear_baseline", "non_robust", "perfect_csi")
OBJECTIVES = ("max_sum", "max_min")
CSI_SCORING = ("worst_case", "true")


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the outer search.

    ``tau0_grid_points`` is the number of intervals of the uniform WET grid,
    so the default evaluates 51 points including both end points.
    Every grid point refines the previous point's beam; the full candidate
    scan runs every ``beam_scan_every`` points and the best
    ``beam_polish_points`` points get a final multistart search.
    ``beam_hints`` are extra unit vectors added to the beam candidates.
    ``score_csi`` selects how :func:`baseline_solve` scores a design:
    against the worst case of the uncertainty set or the true channel.
    """

    tau0_grid_points: int = 50
    beam_multistarts: int = 2
    bisection_tol: float = 1e-9
    sca_max_iters: int = 20
    objective: str = "max_sum"
    scheme: str = "proposed"
    beam_max_iters: int = 40
    beam_scan_every: int = 10
    beam_polish_points: int = 3
    beam_hints: tuple = ()
    linear_eta: float = 0.5
    score_csi: str = "worst_case"

    def __post_init__(self):
        if int(self.tau0_grid_points) < 2:
            raise ConfigError("tau0_grid_points must be at least 2")
        if int(self.beam_multistarts) < 1 or int(self.beam_max_iters) < 0:
            raise ConfigError("beam_multistarts must be >= 1 and beam_max_iters >= 0")
        if int(self.beam_scan_every) < 1 or int(self.beam_polish_points) < 0:
            raise ConfigError("beam_scan_every must be >= 1 and beam_polish_points >= 0")
        if not self.bisection_tol > 0:
            raise ConfigError("bisection_tol must be positive")
        if int(self.sca_max_iters) < 1:
            raise ConfigError("sca_max_iters must be positive")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0.0 < self.linear_eta <= 1.0:
            raise ConfigError("linear_eta must lie in (0, 1]")
        if self.score_csi not in CSI_SCORING:
            raise ConfigError(f"unknown score_csi {self.score_csi!r}")
        hints = tuple(np.asarray(h, dtype=complex).ravel() for h in self.beam_hints)
        object.__setattr__(self, "beam_hints", hints)

    @property
    def maxmin(self) -> bool:
        return self.objective == "max_min"

    def replace(self, **changes) -> "SolverOptions":
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SolverOptions":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown solver options: {sorted(extra)}")
        return cls(**dict(data))


@dataclass(frozen=True, eq=False)
class AllocationPolicy:
    """One harvest-then-transmit schedule.

    Attributes
    ----------
    tau0 : float
        Energy-transfer duration.
    tau : ndarray, shape (K,)
        Uplink durations.
    beam : ndarray, shape (N_T,)
        Unit-norm energy beam; the transmit covariance is ``p_max * u u^H``.
    lam : ndarray, shape (K, m)
        Per-eigenmode transmit powers, modes sorted by decreasing gain.
    theta : ndarray, shape (K,)
        Worst-case received RF power the design assumed.
    rates : ndarray, shape (K,)
        Design throughput per user (bits per normalised slot).
    """

    tau0: float
    tau: np.ndarray
    beam: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    rates: np.ndarray

    @property
    def streams(self) -> np.ndarray:
        return np.count_nonzero(self.lam > 0.0, axis=1)

    @classmethod
    def zeros(cls, k: int, m: int, beam) -> "AllocationPolicy":
        return cls(0.0, np.zeros(k), np.asarray(beam, dtype=complex), np.zeros((k, m)),
                   np.zeros(k), np.zeros(k))


@dataclass(eq=False)
class SolveReport:
    """Result of one solve plus diagnostics.

    ``objective_value`` is what the policy achieves when scored;
    ``predicted_value`` is what its design model promised (the two agree for
    the proposed scheme).  ``linear_eta`` is set when the design budgeted
    with the linear harvester.
    """

    objective_value: float
    policy: AllocationPolicy
    objective: str = "max_sum"
    scheme: str = "proposed"
    kkt_residuals: dict = field(default_factory=dict)
    sca_iterations: int = 0
    feasible_users: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    predicted_value: float | None = None
    linear_eta: float | None = None
    achieved_rates: np.ndarray | None = None
    tau0_grid: np.ndarray | None = None
    grid_objectives: np.ndarray | None = None
    sca_history: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.predicted_value is None:
            self.predicted_value = float(self.objective_value)

    def to_dict(self) -> dict:
        pol = self.policy
        out = {
            "objective": self.objective,
            "scheme": self.scheme,
            "objective_value": float(self.objective_value),
            "predicted_value": float(self.predicted_value),
            "tau0": float(pol.tau0),
            "tau": pol.tau.tolist(),
            "theta": pol.theta.tolist(),
            "rates": pol.rates.tolist(),
            "lambda": pol.lam.tolist(),
            "beam_real": pol.beam.real.tolist(),
            "beam_imag": pol.beam.imag.tolist(),
            "feasible_users": [bool(x) for x in self.feasible_users],
            "residuals": {k: float(v) for k, v in self.kkt_residuals.items()},
            "sca_iterations": int(self.sca_iterations),
        }
        if self.achieved_rates is not None:
            out["achieved_rates"] = np.asarray(self.achieved_rates).tolist()
        if self.grid_objectives is not None:
            out["tau0_grid"] = np.asarray(self.tau0_grid).tolist()
            out["grid_objectives"] = np.asarray(self.grid_objectives).tolist()
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)
