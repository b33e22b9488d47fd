"""Pure-Python inner solver (reference twin of ``_kernels.pyx``).

Per-user eigenmode gains must be sorted in descending order; zero gains mark
unusable modes.  Everything is parametrised by the water level ``mu`` of the
user's water-filling solution:

* radiated power   ``P(mu) = sum_i (mu - 1/g_i)^+``
* spectral eff.    ``C(mu) = sum_i log2(g_i mu)^+``
* marginal rate    ``D(mu) = C - P dC/dP = sum_i [ln(g_i mu) - 1 + 1/(g_i mu)]^+ / ln 2``

For a user with energy ``E`` and time ``tau`` the radiated power is
``P = E / (eps tau)`` and the rate is ``tau C``; ``D`` is the derivative of
that rate with respect to ``tau``.
"""

from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)
_MAXIT = 200
_XTOL = 1e-15


def waterfill_sorted(g, n, budget, lam):
    """Closed-form water-filling over the first ``n`` (positive, sorted) gains.

    Writes powers into ``lam`` and returns the water level (0 if no power).
    """
    for i in range(len(lam)):
        lam[i] = 0.0
    if n == 0 or budget <= 0.0:
        return 1.0 / g[0] if n > 0 else 0.0
    cum = 0.0
    mu = 0.0
    m = n
    for j in range(n):
        cum += 1.0 / g[j]
        mu = (budget + cum) / (j + 1)
        if j == n - 1 or mu <= 1.0 / g[j + 1]:
            m = j + 1
            break
    for i in range(m):
        lam[i] = mu - 1.0 / g[i]
        if lam[i] < 0.0:
            lam[i] = 0.0
    return mu


def _pcd(g, n, x):
    """Return P, C (bits), D (bits), n_active, dD/dx at ``mu = exp(x)``."""
    mu = math.exp(x)
    p = 0.0
    c = 0.0
    d = 0.0
    dd = 0.0
    na = 0
    for i in range(n):
        gm = g[i] * mu
        if gm <= 1.0:
            break
        na += 1
        p += mu - 1.0 / g[i]
        y = gm - 1.0
        c += math.log1p(y)
        d += math.log1p(y) - y / gm
        dd += 1.0 - 1.0 / gm
    return p, c / LN2, d / LN2, na, dd / LN2


def level_for_marginal(g, n, kappa, x0=None):
    """ln(mu) such that the marginal rate ``D(mu)`` equals ``kappa`` (> 0).

    ``x0`` is an optional warm start.
    """
    lo = -math.log(g[0])
    step = 1.0
    if x0 is not None and x0 > lo:
        if _pcd(g, n, x0)[2] < kappa:
            lo = x0
        else:
            step = x0 - lo
    hi = lo + step
    while _pcd(g, n, hi)[2] < kappa:
        lo = hi
        step *= 2.0
        hi = lo + step
    x = x0 if (x0 is not None and lo < x0 < hi) else 0.5 * (lo + hi)
    for _ in range(_MAXIT):
        _, _, d, _, dd = _pcd(g, n, x)
        f = d - kappa
        if f > 0.0:
            hi = x
        else:
            lo = x
        if dd > 0.0:
            xn = x - f / dd
        else:
            xn = 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= _XTOL * max(1.0, abs(x)) or hi - lo <= _XTOL * max(1.0, abs(x)):
            x = xn
            break
        x = xn
    return x


def level_for_rate_per_power(g, n, r, x0=None):
    """ln(mu) such that ``C(mu)/P(mu) == r`` with ``0 < r < g[0]/ln2``."""
    lo = -math.log(g[0])
    step = 1.0
    if x0 is not None and x0 > lo:
        p, c, _, _, _ = _pcd(g, n, x0)
        if c >= r * p:
            lo = x0
        else:
            step = x0 - lo
    hi = lo + step
    while True:
        p, c, _, _, _ = _pcd(g, n, hi)
        if c < r * p:
            break
        lo = hi
        step *= 2.0
        hi = lo + step
    x = x0 if (x0 is not None and lo < x0 < hi) else 0.5 * (lo + hi)
    lr = math.log(r)
    for _ in range(_MAXIT):
        p, c, _, na, _ = _pcd(g, n, x)
        if p <= 0.0 or c <= 0.0:
            lo = x
            xn = 0.5 * (lo + hi)
        else:
            f = math.log(c) - math.log(p) - lr
            if f > 0.0:
                lo = x
            else:
                hi = x
            mu = math.exp(x)
            fp = (na / LN2) / c - mu * na / p
            xn = x - f / fp if fp < 0.0 else 0.5 * (lo + hi)
            if not (lo < xn < hi):
                xn = 0.5 * (lo + hi)
        if abs(xn - x) <= _XTOL * max(1.0, abs(x)) or hi - lo <= _XTOL * max(1.0, abs(x)):
            x = xn
            break
        x = xn
    return x


def _npos(row):
    n = 0
    for v in row:
        if v > 0.0:
            n += 1
        else:
            break
    return n


def _finish(gains, budgets, eps, active, npos, tau, lam, rate, mu_out):
    k = gains.shape[0]
    for j in range(k):
        if active[j] and tau[j] > 0.0:
            p = budgets[j] / (eps[j] * tau[j])
            mu_out[j] = waterfill_sorted(gains[j], npos[j], p, lam[j])
            c = 0.0
            for i in range(npos[j]):
                if lam[j, i] > 0.0:
                    c += math.log1p(gains[j, i] * lam[j, i])
            rate[j] = tau[j] * c / LN2
        else:
            tau[j] = 0.0
            lam[j, :] = 0.0
            rate[j] = 0.0
            mu_out[j] = 0.0


def solve_inner(gains, budgets, eps, t_wit, maxmin, tau, lam, rate, sens, mu_out):
    """Allocate WIT time and eigenmode powers for fixed per-user energies.

    Parameters
    ----------
    gains : (K, m) float array
        ``gamma*^2 / sigma_n^2`` per user, sorted descending per row.
    budgets : (K,) float array
        Energy available for radiation (Joule); ``<= 0`` means infeasible.
    eps : (K,) float array
        Power-amplifier multipliers.
    t_wit : float
        Time available for all uplink transmissions.
    maxmin : int
        0 maximises the sum of rates, 1 the minimum rate.
    tau, lam, rate, sens, mu_out :
        Output buffers: time, powers, rates, objective sensitivity to each
        user's energy, water levels.

    Returns
    -------
    (objective, level) where ``level`` is the common marginal rate (max-sum)
    or the common rate target (max-min).
    """
    k = gains.shape[0]
    npos = [_npos(gains[j]) for j in range(k)]
    active = [budgets[j] > 0.0 and npos[j] > 0 for j in range(k)]
    for j in range(k):
        tau[j] = 0.0
        sens[j] = 0.0
    lam[:, :] = 0.0
    if t_wit <= 0.0 or not any(active) or (maxmin and not all(active)):
        _finish(gains, budgets, eps, [False] * k, npos, tau, lam, rate, mu_out)
        return 0.0, 0.0
    dval = [0.0] * k
    if maxmin:
        level = _maxmin_level(gains, budgets, eps, t_wit, npos, tau, dval)
    else:
        level = _maxsum_level(gains, budgets, eps, t_wit, npos, active, tau, dval)
    s = 0.0
    for j in range(k):
        s += tau[j]
    if s > 0.0:
        for j in range(k):
            tau[j] *= t_wit / s
    _finish(gains, budgets, eps, active, npos, tau, lam, rate, mu_out)
    if maxmin:
        inv = 0.0
        for j in range(k):
            inv += 1.0 / dval[j]
        for j in range(k):
            sens[j] = (1.0 / (LN2 * mu_out[j] * eps[j])) / dval[j] / inv
        obj = min(rate[j] for j in range(k))
    else:
        obj = 0.0
        for j in range(k):
            obj += rate[j]
            if tau[j] > 0.0:
                sens[j] = 1.0 / (LN2 * mu_out[j] * eps[j])
    return obj, level


def _maxsum_times(gains, budgets, eps, npos, active, kappa, tau, dval, xw):
    """Fill tau for marginal ``kappa``; return (sum tau, d sum / d ln kappa).

    ``xw`` holds per-user warm starts and is updated in place.
    """
    s = 0.0
    ds = 0.0
    for j in range(len(npos)):
        if not active[j]:
            tau[j] = 0.0
            continue
        x = level_for_marginal(gains[j], npos[j], kappa, xw[j])
        xw[j] = x
        p, _, d, na, dd = _pcd(gains[j], npos[j], x)
        t = budgets[j] / (eps[j] * p)
        tau[j] = t
        dval[j] = d
        s += t
        # dtau/dln(kappa) = -(tau/P) * dP/dx / dD/dx * kappa, dP/dx = mu*na
        ds += -(t / p) * (math.exp(x) * na) / dd * kappa
    return s, ds


def _maxsum_level(gains, budgets, eps, t_wit, npos, active, tau, dval):
    xw = [None] * len(npos)
    lt = math.log(t_wit)
    lo, hi = None, None
    z = 0.0
    for _ in range(400):
        s, _ = _maxsum_times(gains, budgets, eps, npos, active, math.exp(z), tau, dval, xw)
        if s > t_wit:
            lo = z
            if hi is not None:
                break
            z += 2.0
        else:
            hi = z
            if lo is not None:
                break
            z -= 2.0
    z = 0.5 * (lo + hi)
    for _ in range(_MAXIT):
        s, ds = _maxsum_times(gains, budgets, eps, npos, active, math.exp(z), tau, dval, xw)
        f = math.log(s) - lt
        if f > 0.0:
            lo = z
        else:
            hi = z
        fp = ds / s
        zn = z - f / fp if fp < 0.0 else 0.5 * (lo + hi)
        if not (lo < zn < hi):
            zn = 0.5 * (lo + hi)
        if abs(f) <= 1e-15 or hi - lo <= _XTOL * max(1.0, abs(z)):
            break
        z = zn
    _maxsum_times(gains, budgets, eps, npos, active, math.exp(z), tau, dval, xw)
    return math.exp(z)


def _maxmin_times(gains, budgets, eps, npos, nu, tau, dval, xw):
    s = 0.0
    ds = 0.0
    for j in range(len(npos)):
        r = nu * eps[j] / budgets[j]
        x = level_for_rate_per_power(gains[j], npos[j], r, xw[j])
        xw[j] = x
        p, _, d, _, _ = _pcd(gains[j], npos[j], x)
        t = budgets[j] / (eps[j] * p)
        tau[j] = t
        dval[j] = d
        s += t
        ds += 1.0 / d
    return s, ds


def _maxmin_level(gains, budgets, eps, t_wit, npos, tau, dval):
    k = len(npos)
    xw = [None] * k
    sup = min(budgets[j] * gains[j, 0] / (eps[j] * LN2) for j in range(k))
    lo, hi = 0.0, sup
    nu = 0.5 * sup
    for _ in range(_MAXIT):
        s, ds = _maxmin_times(gains, budgets, eps, npos, nu, tau, dval, xw)
        f = s - t_wit
        if f > 0.0:
            hi = nu
        else:
            lo = nu
        nn = nu - f / ds if ds > 0.0 else 0.5 * (lo + hi)
        if not (lo < nn < hi):
            nn = 0.5 * (lo + hi)
        if abs(f) <= 1e-15 * t_wit or hi - lo <= 1e-15 * sup:
            break
        nu = nn
    _maxmin_times(gains, budgets, eps, npos, nu, tau, dval, xw)
    return nu


def batch_objective(gains, budget_matrix, eps, t_wit, maxmin):
    """Objective for each row of ``budget_matrix`` (candidates x K)."""
    c, k = budget_matrix.shape
    m = gains.shape[1]
    out = np.empty(c)
    tau = np.empty(k)
    lam = np.empty((k, m))
    rate = np.empty(k)
    sens = np.empty(k)
    mu = np.empty(k)
    for i in range(c):
        out[i] = solve_inner(gains, budget_matrix[i], eps, t_wit, maxmin, tau, lam, rate, sens, mu)[0]
    return out
