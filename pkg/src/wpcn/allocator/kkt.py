"""Optimality residuals of a reported allocation."""

from __future__ import annotations

import math

import numpy as np

from .model import DesignModel, design_scenario
from .types import SolveReport

__all__ = ["verify_kkt", "policy_residuals", "RESIDUAL_NAMES"]

RESIDUAL_NAMES = (
    "water_level_spread",
    "budget_gap",
    "closed_form_tau",
    "time_budget",
    "full_power",
    "marginal_spread",
    "rate_spread",
)
LN2 = math.log(2.0)


def _spread(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    hi = np.max(np.abs(x))
    return float((np.max(x) - np.min(x)) / hi) if hi > 0 else 0.0


def policy_residuals(model: DesignModel, policy, maxmin: bool) -> dict[str, float]:
    """Relative residuals of the optimality conditions for ``policy``.

    * ``water_level_spread``: spread of the implied budget multiplier
      ``1/(ln2 eps (lam_i + 1/g_i))`` over active modes, plus any inactive
      mode lying below the water level.
    * ``budget_gap``: energy left unspent by users that transmit.
    * ``closed_form_tau``: mismatch of the closed-form durations that follow from
      budget exhaustion and a tight time budget.
    * ``time_budget``: unused slot time (or overrun).
    * ``full_power``: ``|Tr(V) - P_max| / P_max``.
    * ``marginal_spread`` (max-sum): spread of the users' marginal rate per
      unit time; ``rate_spread`` (max-min): spread of the users' rates.
    """
    t_max = model.t_max
    tau0 = float(policy.tau0)
    tau = np.asarray(policy.tau, dtype=float)
    lam = np.asarray(policy.lam, dtype=float)
    u = np.asarray(policy.beam, dtype=complex)
    gains = model.gains
    theta = model.theta(u)
    phi = model.harvest(theta)
    energy = tau0 * phi - t_max * model.p_c
    active = tau > 0
    out = dict.fromkeys(RESIDUAL_NAMES, 0.0)

    wl = 0.0
    marg = []
    for k in np.flatnonzero(active):
        on = lam[k] > 0
        if not np.any(on):
            wl = max(wl, 1.0)
            continue
        levels = lam[k, on] + 1.0 / gains[k, on]
        beta = 1.0 / (LN2 * model.eps[k] * levels)
        wl = max(wl, _spread(beta))
        mu = float(np.mean(levels))
        off = (~on) & (gains[k] > 0)
        if np.any(off):
            wl = max(wl, float(np.max(np.maximum(mu - 1.0 / gains[k, off], 0.0)) / mu))
        gm = gains[k, on] * mu
        marg.append(float(np.sum(np.log(gm) - 1.0 + 1.0 / gm) / LN2))
    out["water_level_spread"] = wl

    spend = tau * model.eps * lam.sum(axis=1)
    scale = np.maximum(np.maximum(tau0 * phi, t_max * model.p_c), 1e-300)
    if np.any(active):
        out["budget_gap"] = float(np.max(np.abs(energy - spend)[active] / scale[active]))
        s = model.eps[active] * lam[active].sum(axis=1)
        tau_cf = energy[active] / s
        tau0_cf = t_max * (1.0 + np.sum(model.p_c[active] / s)) / (1.0 + np.sum(phi[active] / s))
        out["closed_form_tau"] = float(max(np.max(np.abs(tau_cf - tau[active])), abs(tau0_cf - tau0)) / t_max)
        out["time_budget"] = float(abs(t_max - tau0 - tau.sum()) / t_max)
    else:
        out["time_budget"] = float(max(tau0 + tau.sum() - t_max, 0.0) / t_max)
    out["full_power"] = float(abs(np.vdot(u, u).real - 1.0))
    if maxmin:
        rates = np.asarray(policy.rates, dtype=float)
        out["rate_spread"] = _spread(rates) if np.all(rates > 0) else 0.0
    else:
        out["marginal_spread"] = _spread(np.array(marg))
    return out


def verify_kkt(report: SolveReport, scenario) -> dict[str, float]:
    """Residual map of ``report`` against the design model of its scheme."""
    scn = design_scenario(scenario, report.scheme)
    harvest = "linear" if report.linear_eta is not None else "nonlinear"
    model = DesignModel(scn, harvest, report.linear_eta or 0.5)
    return policy_residuals(model, report.policy, report.objective == "max_min")
