"""Per-scheme view of a scenario and fast objective evaluation.

For a fixed WET duration ``tau0`` and energy beam ``u`` the problem splits
per user: the worst-case received power fixes the harvested energy, the
energy budget and the shrunk uplink gains fix each user's rate-versus-time
curve, and the compiled inner solver shares the remaining time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .. import kernels
from ..channel import Scenario, UserChannel, worst_case_singular_values
from ..eh_model import _logistic
from .types import SCHEMES

__all__ = ["DesignModel", "InnerResult", "design_scenario", "mode_gains"]


def design_scenario(scenario: Scenario, scheme: str) -> Scenario:
    """Channels and radii a scheme believes in when it designs a policy.

    ``non_robust`` ignores the downlink error ball, ``perfect_csi`` designs
    on the true channels with no uncertainty.  The other schemes use the
    scenario as given.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "non_robust":
        return scenario.with_users([replace(u, upsilon=0.0) for u in scenario.users])
    if scheme == "perfect_csi":
        users = []
        for u in scenario.users:
            g = u.g_hat if u.g_true is None else u.g_true
            h = u.h_hat if u.h_true is None else u.h_true
            users.append(UserChannel(g, h, 0.0, 0.0, g_true=g, h_true=h))
        return scenario.with_users(users)
    return scenario


def mode_gains(scenario: Scenario) -> np.ndarray:
    """Worst-case eigenmode gains ``gamma*^2 / sigma_n^2``, shape (K, m).

    Rows are sorted in decreasing order and zero-padded to the largest
    ``min(N_U, N_R)`` among users.
    """
    rows = [worst_case_singular_values(u.gamma_hat, u.rho) ** 2 / scenario.sigma_n2
            for u in scenario.users]
    m = max(len(r) for r in rows)
    out = np.zeros((len(rows), m))
    for k, r in enumerate(rows):
        out[k, : len(r)] = r
    return out


@dataclass
class InnerResult:
    objective: float
    tau: np.ndarray
    lam: np.ndarray
    rates: np.ndarray
    sens: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    budgets: np.ndarray
    level: float
    beam_proj: np.ndarray | None = None
    beam_gains: np.ndarray | None = None


class DesignModel:
    """Objective of one scheme as a function of ``(tau0, u)``.

    Parameters
    ----------
    scenario : Scenario
        Channels, radii and constants the design uses.
    harvest : {"nonlinear", "linear"}
        Harvester model used for budgeting.
    eta : float
        Conversion efficiency of the linear model.
    """

    def __init__(self, scenario: Scenario, harvest: str = "nonlinear", eta: float = 0.5):
        if harvest not in ("nonlinear", "linear"):
            raise ValueError(f"unknown harvest model {harvest!r}")
        self.scenario = scenario
        self.linear = harvest == "linear"
        self.eta = float(eta)
        users = scenario.users
        self.k = len(users)
        self.n_t = scenario.n_t
        self.p_max = float(scenario.p_max)
        self.t_max = float(scenario.t_max)
        self.eps = np.ascontiguousarray(scenario.eps, dtype=float)
        self.p_c = np.asarray(scenario.p_c, dtype=float)
        self.upsilon = np.array([u.upsilon for u in users], dtype=float)
        self.g_hat = [u.g_hat for u in users]
        # zero-padded stack (K, N_T, n_u) so per-user products vectorise
        n_u = max(g.shape[1] for g in self.g_hat)
        self.g_stack = np.zeros((self.k, self.n_t, n_u), dtype=complex)
        for i, g in enumerate(self.g_hat):
            self.g_stack[i, :, : g.shape[1]] = g
        self.g_stack_h = np.ascontiguousarray(self.g_stack.conj().transpose(0, 2, 1))
        self.gains = np.ascontiguousarray(mode_gains(scenario))
        self.m = self.gains.shape[1]
        self.eh_m = np.array([p.M for p in scenario.eh])
        self.eh_a = np.array([p.a for p in scenario.eh])
        self.eh_b = np.array([p.b for p in scenario.eh])
        self.eh_omega = np.array([p.omega for p in scenario.eh])
        self._tau = np.empty(self.k)
        self._lam = np.empty((self.k, self.m))
        self._rate = np.empty(self.k)
        self._sens = np.empty(self.k)
        self._mu = np.empty(self.k)

    # -- harvest ---------------------------------------------------------
    def _col(self, arr, ndim):
        return arr if ndim == 1 else arr[:, None]

    def harvest(self, theta: np.ndarray) -> np.ndarray:
        """Harvested power for received power ``theta`` of shape (K,) or (K, C)."""
        if self.linear:
            return self.eta * theta
        nd = theta.ndim
        m, a, b, om = (self._col(x, nd) for x in (self.eh_m, self.eh_a, self.eh_b, self.eh_omega))
        return (m * _logistic(a * (theta - b)) - m * om) / (1.0 - om)

    def harvest_slope(self, theta: np.ndarray) -> np.ndarray:
        if self.linear:
            return np.full_like(theta, self.eta)
        nd = theta.ndim
        m, a, b, om = (self._col(x, nd) for x in (self.eh_m, self.eh_a, self.eh_b, self.eh_omega))
        s = _logistic(a * (theta - b))
        return a * m * s * (1.0 - s) / (1.0 - om)

    # -- downlink --------------------------------------------------------
    def beam_gains(self, u: np.ndarray) -> np.ndarray:
        """``||G_k^H u||`` for a beam (N_T,) or a stack of beams (N_T, C)."""
        z = self.g_stack_h @ u
        return np.sqrt(np.sum(z.real**2 + z.imag**2, axis=1))

    def theta(self, u: np.ndarray, gains: np.ndarray | None = None) -> np.ndarray:
        s = self.beam_gains(u) if gains is None else gains
        ups = self._col(self.upsilon, s.ndim)
        return self.p_max * np.maximum(s - ups, 0.0) ** 2

    def budgets(self, tau0: float, theta: np.ndarray, harvested: np.ndarray | None = None) -> np.ndarray:
        if harvested is None:
            harvested = self.harvest(theta)
        return tau0 * harvested - self._col(self.t_max * self.p_c, theta.ndim)

    def max_budgets(self, tau0: float) -> np.ndarray:
        """Per-user budget with the user's own best beam (an upper bound)."""
        smax = np.array([np.linalg.norm(g, 2) if g.size else 0.0 for g in self.g_hat])
        theta = self.p_max * np.maximum(smax - self.upsilon, 0.0) ** 2
        return self.budgets(tau0, theta)

    # -- inner problem ---------------------------------------------------
    def solve_budgets(self, tau0: float, budgets: np.ndarray, maxmin: bool,
                      theta: np.ndarray | None = None) -> InnerResult:
        t_wit = self.t_max - tau0
        b = np.ascontiguousarray(budgets, dtype=float)
        obj, level = kernels.solve_inner(self.gains, b, self.eps, t_wit, int(maxmin),
                                         self._tau, self._lam, self._rate, self._sens, self._mu)
        return InnerResult(float(obj), self._tau.copy(), self._lam.copy(), self._rate.copy(),
                           self._sens.copy(), self._mu.copy(),
                           np.zeros(self.k) if theta is None else theta, b, float(level))

    def solve(self, tau0: float, u: np.ndarray, maxmin: bool) -> InnerResult:
        z = self.g_stack_h @ u
        s = np.sqrt(np.sum(z.real**2 + z.imag**2, axis=1))
        theta = self.theta(u, s)
        res = self.solve_budgets(tau0, self.budgets(tau0, theta), maxmin, theta)
        res.beam_proj = z
        res.beam_gains = s
        return res

    def objective(self, tau0: float, u: np.ndarray, maxmin: bool) -> float:
        theta = self.theta(u)
        b = np.ascontiguousarray(self.budgets(tau0, theta))
        return float(kernels.solve_inner(self.gains, b, self.eps, self.t_max - tau0, int(maxmin),
                                         self._tau, self._lam, self._rate, self._sens, self._mu)[0])

    def batch_objective(self, tau0: float, beams: np.ndarray, maxmin: bool) -> np.ndarray:
        """Objective for every column of ``beams`` (N_T, C)."""
        theta = self.theta(beams)
        b = np.ascontiguousarray(self.budgets(tau0, theta).T)
        return kernels.batch_objective(self.gains, b, self.eps, self.t_max - tau0, int(maxmin))

    def beam_weights(self, tau0: float, u: np.ndarray, res: InnerResult) -> np.ndarray:
        """Per-user weights ``w_k`` with ``dF/du* = sum_k w_k G_k G_k^H u``.

        Uses the envelope sensitivity of the inner optimum to each user's
        energy budget, the harvester slope and the worst-case shrinkage
        factor ``1 - upsilon/||G^H u||``.
        """
        s = self.beam_gains(u) if res.beam_gains is None else res.beam_gains
        shrink = np.where(s > self.upsilon, 1.0 - self.upsilon / np.where(s > 0, s, 1.0), 0.0)
        return res.sens * tau0 * self.harvest_slope(res.theta) * self.p_max * shrink

    def gradient(self, tau0: float, u: np.ndarray, res: InnerResult) -> np.ndarray:
        w = self.beam_weights(tau0, u, res)
        z = self.g_stack_h @ u if res.beam_proj is None else res.beam_proj
        return np.einsum("ktn,kn->t", self.g_stack, w[:, None] * z)
