"""Per-user water-filling and time sharing for fixed energy budgets."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .. import kernels

__all__ = ["WaterFill", "waterfill", "user_rate", "allocate_time_sum", "allocate_time_maxmin"]


class WaterFill(NamedTuple):
    powers: np.ndarray
    level: float
    usable: bool


def waterfill(gains, budget: float) -> WaterFill:
    """Maximise ``sum log2(1 + g_i p_i)`` subject to ``sum p_i = budget``.

    Parameters
    ----------
    gains : array_like
        Non-negative mode gains (1/Watt), any order.
    budget : float
        Total power (Watt).

    Returns
    -------
    WaterFill
        ``powers`` in the input order, the water level ``mu`` and ``usable``,
        which is False when no gain is positive (all powers are then zero).
    """
    g = np.asarray(gains, dtype=float).ravel()
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("gains must be finite and non-negative")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    order = np.argsort(-g, kind="stable")
    gs = np.ascontiguousarray(g[order])
    n = int(np.count_nonzero(gs > 0))
    out = np.zeros_like(g)
    if n == 0:
        return WaterFill(out, 0.0, False)
    lam = np.zeros(g.size)
    mu = kernels.waterfill_sorted(gs, n, float(budget), lam)
    out[order] = lam
    return WaterFill(out, float(mu), True)


def user_rate(tau_k: float, energy: float, gamma_star, sigma_n2: float, eps: float) -> float:
    """Throughput of one user that radiates ``energy / eps`` over ``tau_k``.

    ``energy`` is the budget that the power amplifier draws (radiated energy
    times ``eps``).  Returns 0 for ``tau_k == 0``.
    """
    if tau_k < 0 or energy < 0:
        raise ValueError("time and energy must be non-negative")
    if tau_k == 0 or energy == 0:
        return 0.0
    g = np.asarray(gamma_star, dtype=float) ** 2 / sigma_n2
    wf = waterfill(g, energy / (eps * tau_k))
    return float(tau_k * np.sum(np.log2(1.0 + wf.powers * g)))


def _gain_matrix(gamma_stars: Sequence, sigma_n2: float) -> np.ndarray:
    rows = [np.sort(np.asarray(gs, dtype=float).ravel())[::-1] ** 2 / sigma_n2 for gs in gamma_stars]
    m = max(len(r) for r in rows)
    out = np.zeros((len(rows), m))
    for k, r in enumerate(rows):
        out[k, : len(r)] = r
    return out


def _inner(budgets, gamma_stars, t_wit, sigma_n2, eps, maxmin):
    b = np.ascontiguousarray(budgets, dtype=float)
    if np.any(b < 0) and not maxmin:
        b = np.maximum(b, 0.0)
    if t_wit < 0:
        raise ValueError("t_wit must be non-negative")
    gains = _gain_matrix(gamma_stars, sigma_n2)
    k, m = gains.shape
    eps = np.ascontiguousarray(np.broadcast_to(np.asarray(eps, dtype=float), (k,)))
    tau, rate, sens, mu = np.empty(k), np.empty(k), np.empty(k), np.empty(k)
    lam = np.empty((k, m))
    obj, _ = kernels.solve_inner(gains, b, eps, float(t_wit), int(maxmin), tau, lam, rate, sens, mu)
    return float(obj), tau, rate


def allocate_time_sum(budgets, gamma_stars, t_wit: float, sigma_n2: float, eps) -> np.ndarray:
    """Uplink durations maximising the sum of water-filled rates.

    Each user's rate is concave and increasing in its time, so the optimum
    equalises the marginal rates of all users with a positive budget.
    """
    return _inner(budgets, gamma_stars, t_wit, sigma_n2, eps, False)[1]


def allocate_time_maxmin(budgets, gamma_stars, t_wit: float, sigma_n2: float, eps) -> tuple[float, np.ndarray]:
    """Largest common rate ``nu`` all users reach within ``t_wit``.

    Returns ``(0, zeros)`` as soon as one user has no positive budget.
    """
    obj, tau, rate = _inner(budgets, gamma_stars, t_wit, sigma_n2, eps, True)
    if not math.isfinite(obj):  # pragma: no cover - defensive
        raise FloatingPointError("max-min time allocation diverged")
    return obj, tau
