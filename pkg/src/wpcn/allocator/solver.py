"""Outer search over the WET duration, SCA mode, schemes and scoring."""

from __future__ import annotations

import numpy as np

from ..channel import Scenario, worst_case_singular_values
from ..config import ConfigError
from ..eh_model import harvest_linear, harvest_nonlinear
from .beam import candidate_beams, refine_beam, search_beam
from .kkt import policy_residuals
from .model import DesignModel, InnerResult, design_scenario
from .types import CSI_SCORING, SCHEMES, AllocationPolicy, SolveReport, SolverOptions

__all__ = [
    "build_model",
    "optimize_beam",
    "solve_fixed_tau0",
    "sca_solve_fixed_tau0",
    "solve",
    "evaluate_policy",
    "baseline_solve",
]


def _options(options: SolverOptions | None, **changes) -> SolverOptions:
    opts = options if options is not None else SolverOptions()
    changes = {k: v for k, v in changes.items() if v is not None}
    return opts.replace(**changes) if changes else opts


def build_model(scenario: Scenario, options: SolverOptions) -> DesignModel:
    """Design model of ``options.scheme`` for ``scenario``."""
    scn = design_scenario(scenario, options.scheme)
    if options.scheme == "linear_baseline":
        return DesignModel(scn, "linear", options.linear_eta)
    return DesignModel(scn)


def _unit_beam(u, n_t: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex).ravel()
    if u.size != n_t:
        raise ValueError(f"beam must have {n_t} entries, got {u.size}")
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise ValueError("beam vector must have unit norm")
    return u


def _report(model: DesignModel, options: SolverOptions, tau0: float, u: np.ndarray,
            res: InnerResult) -> SolveReport:
    policy = AllocationPolicy(float(tau0), res.tau, u.copy(), res.lam, res.theta, res.rates)
    feasible = (res.budgets > 0) & (model.gains[:, 0] > 0)
    report = SolveReport(
        objective_value=res.objective,
        policy=policy,
        objective=options.objective,
        scheme=options.scheme,
        feasible_users=feasible,
        linear_eta=options.linear_eta if model.linear else None,
    )
    report.kkt_residuals = policy_residuals(model, policy, options.maxmin)
    return report


def optimize_beam(scenario: Scenario, tau0: float, objective: str = "max_sum",
                  options: SolverOptions | None = None) -> np.ndarray:
    """Best energy beam found for a fixed WET duration."""
    opts = _options(options, objective=objective)
    model = build_model(scenario, opts)
    if not 0.0 <= tau0 <= model.t_max:
        raise ValueError("tau0 must lie in [0, t_max]")
    cands = candidate_beams(model, opts.beam_hints)
    u, _ = search_beam(model, tau0, opts.maxmin, cands, opts.beam_multistarts, opts.beam_max_iters)
    return u


def solve_fixed_tau0(scenario: Scenario, tau0: float, u, objective: str = "max_sum",
                     options: SolverOptions | None = None) -> SolveReport:
    """Optimal uplink schedule for a given WET duration and energy beam.

    Harvest is evaluated at the worst-case received power of ``u``; users
    whose harvest cannot cover their circuit power stay silent.
    """
    opts = _options(options, objective=objective)
    model = build_model(scenario, opts)
    if not 0.0 <= tau0 <= model.t_max:
        raise ValueError(f"tau0 must lie in [0, {model.t_max}], got {tau0}")
    u = _unit_beam(u, model.n_t)
    res = model.solve(float(tau0), u, opts.maxmin)
    return _report(model, opts, tau0, u, res)


def sca_solve_fixed_tau0(scenario: Scenario, tau0: float, u, objective: str = "max_sum",
                         options: SolverOptions | None = None, anchors="nominal") -> SolveReport:
    """Fixed-``tau0`` solve with the harvester replaced by its tangent.

    Each pass budgets with ``Phi(a) + Phi'(a) (theta - a)`` at the anchors
    ``a`` and then moves the anchors to the received powers the pass
    achieved.  ``anchors`` is ``"nominal"`` (received power without
    uncertainty), ``"true"`` (the worst-case power of ``u``) or an array.
    Stops when the anchors stop moving or the objective changes by less than
    ``1e-6`` relative.  Anchors below the harvester turn-on power are
    recorded in ``report.warnings``.
    """
    opts = _options(options, objective=objective)
    model = build_model(scenario, opts)
    if not 0.0 <= tau0 <= model.t_max:
        raise ValueError(f"tau0 must lie in [0, {model.t_max}], got {tau0}")
    u = _unit_beam(u, model.n_t)
    theta = model.theta(u)
    if isinstance(anchors, str):
        if anchors == "nominal":
            anchor = model.p_max * model.beam_gains(u) ** 2
        elif anchors == "true":
            anchor = theta.copy()
        else:
            raise ValueError(f"unknown anchor initialisation {anchors!r}")
    else:
        anchor = np.asarray(anchors, dtype=float).copy()
        if anchor.shape != theta.shape or np.any(anchor < 0):
            raise ValueError("anchors must be non-negative, one per user")

    history: list[float] = []
    warnings: list[str] = []
    res = None
    it = 0
    for it in range(1, opts.sca_max_iters + 1):
        if not model.linear:
            low = np.flatnonzero(anchor < model.eh_b)
            if low.size:
                warnings.append(f"iteration {it}: anchor below EH turn-on power for users {low.tolist()}")
        phi_hat = model.harvest(anchor) + model.harvest_slope(anchor) * (theta - anchor)
        res = model.solve_budgets(float(tau0), model.budgets(tau0, theta, phi_hat), opts.maxmin, theta)
        history.append(res.objective)
        moved = not np.allclose(theta, anchor, rtol=1e-12, atol=0.0)
        anchor = theta.copy()
        if not moved:
            break
        if it > 1 and abs(history[-1] - history[-2]) <= 1e-6 * max(abs(history[-1]), 1e-300):
            break
    report = _report(model, opts, tau0, u, res)
    report.sca_iterations = it
    report.sca_history = history
    report.warnings = warnings
    return report


def _grid_search(model: DesignModel, opts: SolverOptions):
    """Objective and beam at every grid point of the WET duration.

    Every point refines the optimum of the previous point.  The full
    candidate scan runs every ``beam_scan_every`` points, and the best
    ``beam_polish_points`` points get a final multistart search seeded with
    their neighbours' beams.
    """
    t_max = model.t_max
    grid = np.linspace(0.0, t_max, opts.tau0_grid_points + 1)
    maxmin = opts.maxmin
    cands = candidate_beams(model, opts.beam_hints)
    objs = np.zeros(grid.size)
    beams = [cands[:, 0]] * grid.size
    usable = model.gains[:, 0] > 0
    live = np.zeros(grid.size, dtype=bool)
    prev = None
    last_scan = None
    for i, t0 in enumerate(grid):
        if t0 <= 0.0 or t0 >= t_max:
            continue
        ok = (model.max_budgets(t0) > 0) & usable
        if (maxmin and not np.all(ok)) or not np.any(ok):
            continue
        live[i] = True
        if prev is None or last_scan is None or i - last_scan >= opts.beam_scan_every:
            warm = [] if prev is None else [prev]
            u, f = search_beam(model, t0, maxmin, cands, opts.beam_multistarts, opts.beam_max_iters, warm)
            last_scan = i
        else:
            u, f = refine_beam(model, t0, prev, maxmin, opts.beam_max_iters)
        objs[i] = f
        beams[i] = u
        if f > 0:
            prev = u
    for i in np.argsort(-objs, kind="stable")[: opts.beam_polish_points]:
        if not live[i] or objs[i] <= 0:
            continue
        warm = [beams[j] for j in (i - 1, i, i + 1) if 0 <= j < grid.size and live[j]]
        u, f = search_beam(model, grid[i], maxmin, cands, opts.beam_multistarts, opts.beam_max_iters, warm)
        if f > objs[i]:
            objs[i], beams[i] = f, u
    best = int(np.argmax(objs))  # first maximiser, i.e. the shortest WET
    return grid, objs, best, beams[best]


def solve(scenario: Scenario, options: SolverOptions | None = None) -> SolveReport:
    """Grid search over the WET duration with a beam search at every point.

    Returns the design report of ``options.scheme``; ties on the grid go to
    the smallest WET duration.
    """
    opts = _options(options)
    model = build_model(scenario, opts)
    grid, objs, best, u = _grid_search(model, opts)
    res = model.solve(float(grid[best]), u, opts.maxmin)
    report = _report(model, opts, float(grid[best]), u, res)
    report.tau0_grid = grid
    report.grid_objectives = objs
    return report


def _policy_energy(policy: AllocationPolicy, scenario: Scenario) -> np.ndarray:
    return policy.tau * scenario.eps * np.asarray(policy.lam).sum(axis=1)


def evaluate_policy(policy: AllocationPolicy, scenario: Scenario, eh_mode: str = "nonlinear",
                    csi_mode: str = "worst_case", *, eta: float = 0.5, perturbations=None) -> np.ndarray:
    """Per-user throughput a policy delivers on a given channel realisation.

    Parameters
    ----------
    policy : AllocationPolicy
    scenario : Scenario
        Supplies the estimates, radii and constants.
    eh_mode : {"nonlinear", "linear"}
        Harvester that actually converts the received power.
    csi_mode : {"worst_case", "true", "sampled"}
        ``worst_case`` uses the least favourable channels in the error balls
        (worst-case received power and shrunk uplink singular values),
        ``true`` uses ``g_true``/``h_true``, ``sampled`` uses
        ``estimate + perturbation`` with one ``(dG, dH)`` pair per user.
    eta : float
        Efficiency of the linear harvester.

    Notes
    -----
    A user whose planned spend exceeds its actual budget has all eigenmode
    powers scaled down by ``budget / spend``.
    """
    if eh_mode not in ("nonlinear", "linear"):
        raise ValueError(f"unknown eh_mode {eh_mode!r}")
    if csi_mode not in ("worst_case", "true", "sampled"):
        raise ValueError(f"unknown csi_mode {csi_mode!r}")
    if csi_mode == "sampled" and (perturbations is None or len(perturbations) != scenario.k):
        raise ValueError("sampled mode needs one (dG, dH) pair per user")
    u = np.asarray(policy.beam, dtype=complex).ravel()
    spend = _policy_energy(policy, scenario)
    rates = np.zeros(scenario.k)
    for k, user in enumerate(scenario.users):
        if csi_mode == "worst_case":
            s = np.linalg.norm(user.g_hat.conj().T @ u)
            theta = scenario.p_max * max(s - user.upsilon, 0.0) ** 2
            gam = worst_case_singular_values(user.gamma_hat, user.rho)
        else:
            if csi_mode == "true":
                g = user.g_hat if user.g_true is None else user.g_true
                h = user.h_hat if user.h_true is None else user.h_true
            else:
                dg, dh = perturbations[k]
                g, h = user.g_hat + dg, user.h_hat + dh
            theta = scenario.p_max * np.linalg.norm(g.conj().T @ u) ** 2
            gam = np.linalg.svd(h, compute_uv=False)
        if eh_mode == "nonlinear":
            harvested = harvest_nonlinear(theta, scenario.eh[k])
        else:
            harvested = harvest_linear(theta, eta)
        budget = policy.tau0 * harvested - scenario.t_max * scenario.p_c[k]
        scale = 1.0
        if spend[k] > budget:
            scale = max(budget, 0.0) / spend[k] if spend[k] > 0 else 0.0
        if policy.tau[k] <= 0 or scale == 0.0:
            continue
        lam = np.asarray(policy.lam[k], dtype=float)
        n = min(lam.size, gam.size)
        snr = scale * lam[:n] * gam[:n] ** 2 / scenario.sigma_n2
        rates[k] = policy.tau[k] * float(np.sum(np.log2(1.0 + snr)))
    return rates


def _aggregate(rates: np.ndarray, objective: str) -> float:
    return float(np.min(rates)) if objective == "max_min" else float(np.sum(rates))


def baseline_solve(scenario: Scenario, options: SolverOptions | None = None) -> SolveReport:
    """Design with ``options.scheme`` and score under the non-linear harvester.

    Robust and mismatched designs are scored on the channels selected by
    ``options.score_csi``; the perfect-CSI benchmark is always scored on the
    true channels it designed for.
    """
    opts = _options(options)
    if opts.scheme not in SCHEMES:  # pragma: no cover - options validate this
        raise ConfigError(f"unknown scheme {opts.scheme!r}")
    if opts.score_csi not in CSI_SCORING:  # pragma: no cover
        raise ConfigError(f"unknown score_csi {opts.score_csi!r}")
    report = solve(scenario, opts)
    if opts.scheme == "perfect_csi":
        achieved = evaluate_policy(report.policy, design_scenario(scenario, "perfect_csi"))
    else:
        achieved = evaluate_policy(report.policy, scenario, "nonlinear", opts.score_csi)
    report.predicted_value = report.objective_value
    report.achieved_rates = achieved
    report.objective_value = _aggregate(achieved, opts.objective)
    return report
