# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner solver; mirrors ``_kernels_py`` line for line."""

import numpy as np

from libc.math cimport exp, log, log1p, fabs

cdef double LN2 = log(2.0)
cdef int _MAXIT = 200
cdef double _XTOL = 1e-15


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef double _waterfill(const double[::1] g, int n, double budget, double[::1] lam) nogil:
    cdef Py_ssize_t i, j
    cdef int m = n
    cdef double cum = 0.0, mu = 0.0
    for i in range(lam.shape[0]):
        lam[i] = 0.0
    if n == 0 or budget <= 0.0:
        return 1.0 / g[0] if n > 0 else 0.0
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


def waterfill_sorted(g, int n, double budget, lam):
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[::1] lv = lam
    return _waterfill(gv, n, budget, lv)


cdef struct PCD:
    double p
    double c
    double d
    int na
    double dd


cdef PCD _pcd(const double[::1] g, int n, double x) nogil:
    cdef PCD r
    cdef double mu = exp(x), gm, y, l1
    cdef Py_ssize_t i
    r.p = 0.0
    r.c = 0.0
    r.d = 0.0
    r.dd = 0.0
    r.na = 0
    for i in range(n):
        gm = g[i] * mu
        if gm <= 1.0:
            break
        r.na += 1
        r.p += mu - 1.0 / g[i]
        y = gm - 1.0
        l1 = log1p(y)
        r.c += l1
        r.d += l1 - y / gm
        r.dd += 1.0 - 1.0 / gm
    r.c /= LN2
    r.d /= LN2
    r.dd /= LN2
    return r


cdef double _NO_START = -1e300


cdef double _level_for_marginal(const double[::1] g, int n, double kappa, double x0) nogil:
    cdef double lo = -log(g[0]), step = 1.0, hi, x, xn, f
    cdef PCD q
    cdef int it
    if x0 > lo:
        if _pcd(g, n, x0).d < kappa:
            lo = x0
        else:
            step = x0 - lo
    hi = lo + step
    while _pcd(g, n, hi).d < kappa:
        lo = hi
        step *= 2.0
        hi = lo + step
    x = x0 if (lo < x0 < hi) else 0.5 * (lo + hi)
    for it in range(_MAXIT):
        q = _pcd(g, n, x)
        f = q.d - kappa
        if f > 0.0:
            hi = x
        else:
            lo = x
        if q.dd > 0.0:
            xn = x - f / q.dd
        else:
            xn = 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if fabs(xn - x) <= _XTOL * _fmax(1.0, fabs(x)) or hi - lo <= _XTOL * _fmax(1.0, fabs(x)):
            x = xn
            break
        x = xn
    return x


cdef double _level_for_rate_per_power(const double[::1] g, int n, double r, double x0) nogil:
    cdef double lo = -log(g[0]), step = 1.0, hi, x, xn, f, lr, mu, fp
    cdef PCD q
    cdef int it
    if x0 > lo:
        q = _pcd(g, n, x0)
        if q.c >= r * q.p:
            lo = x0
        else:
            step = x0 - lo
    hi = lo + step
    while True:
        q = _pcd(g, n, hi)
        if q.c < r * q.p:
            break
        lo = hi
        step *= 2.0
        hi = lo + step
    x = x0 if (lo < x0 < hi) else 0.5 * (lo + hi)
    lr = log(r)
    for it in range(_MAXIT):
        q = _pcd(g, n, x)
        if q.p <= 0.0 or q.c <= 0.0:
            lo = x
            xn = 0.5 * (lo + hi)
        else:
            f = log(q.c) - log(q.p) - lr
            if f > 0.0:
                lo = x
            else:
                hi = x
            mu = exp(x)
            fp = (q.na / LN2) / q.c - mu * q.na / q.p
            if fp < 0.0:
                xn = x - f / fp
            else:
                xn = 0.5 * (lo + hi)
            if not (lo < xn < hi):
                xn = 0.5 * (lo + hi)
        if fabs(xn - x) <= _XTOL * _fmax(1.0, fabs(x)) or hi - lo <= _XTOL * _fmax(1.0, fabs(x)):
            x = xn
            break
        x = xn
    return x


def level_for_marginal(g, int n, double kappa, x0=None):
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    return _level_for_marginal(gv, n, kappa, _NO_START if x0 is None else x0)


def level_for_rate_per_power(g, int n, double r, x0=None):
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    return _level_for_rate_per_power(gv, n, r, _NO_START if x0 is None else x0)


cdef void _maxsum_times(const double[:, ::1] gains, const double[::1] budgets, const double[::1] eps,
                        int[::1] npos, int[::1] active, double kappa, double[::1] tau,
                        double[::1] dval, double[::1] xw, double* s_out, double* ds_out) nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0, ds = 0.0, x, t
    cdef PCD q
    for j in range(npos.shape[0]):
        if not active[j]:
            tau[j] = 0.0
            continue
        x = _level_for_marginal(gains[j], npos[j], kappa, xw[j])
        xw[j] = x
        q = _pcd(gains[j], npos[j], x)
        t = budgets[j] / (eps[j] * q.p)
        tau[j] = t
        dval[j] = q.d
        s += t
        ds += -(t / q.p) * (exp(x) * q.na) / q.dd * kappa
    s_out[0] = s
    ds_out[0] = ds


cdef double _maxsum_level(const double[:, ::1] gains, const double[::1] budgets, const double[::1] eps,
                          double t_wit, int[::1] npos, int[::1] active, double[::1] tau,
                          double[::1] dval, double[::1] xw) nogil:
    cdef double lt = log(t_wit), lo = 0.0, hi = 0.0, z = 0.0, s = 0.0, ds = 0.0, f, fp, zn
    cdef int have_lo = 0, have_hi = 0, it
    for it in range(400):
        _maxsum_times(gains, budgets, eps, npos, active, exp(z), tau, dval, xw, &s, &ds)
        if s > t_wit:
            lo = z
            have_lo = 1
            if have_hi:
                break
            z += 2.0
        else:
            hi = z
            have_hi = 1
            if have_lo:
                break
            z -= 2.0
    z = 0.5 * (lo + hi)
    for it in range(_MAXIT):
        _maxsum_times(gains, budgets, eps, npos, active, exp(z), tau, dval, xw, &s, &ds)
        f = log(s) - lt
        if f > 0.0:
            lo = z
        else:
            hi = z
        fp = ds / s
        if fp < 0.0:
            zn = z - f / fp
        else:
            zn = 0.5 * (lo + hi)
        if not (lo < zn < hi):
            zn = 0.5 * (lo + hi)
        if fabs(f) <= 1e-15 or hi - lo <= _XTOL * _fmax(1.0, fabs(z)):
            break
        z = zn
    _maxsum_times(gains, budgets, eps, npos, active, exp(z), tau, dval, xw, &s, &ds)
    return exp(z)


cdef void _maxmin_times(const double[:, ::1] gains, const double[::1] budgets, const double[::1] eps,
                        int[::1] npos, double nu, double[::1] tau, double[::1] dval,
                        double[::1] xw, double* s_out, double* ds_out) nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0, ds = 0.0, x, t, r
    cdef PCD q
    for j in range(npos.shape[0]):
        r = nu * eps[j] / budgets[j]
        x = _level_for_rate_per_power(gains[j], npos[j], r, xw[j])
        xw[j] = x
        q = _pcd(gains[j], npos[j], x)
        t = budgets[j] / (eps[j] * q.p)
        tau[j] = t
        dval[j] = q.d
        s += t
        ds += 1.0 / q.d
    s_out[0] = s
    ds_out[0] = ds


cdef double _maxmin_level(const double[:, ::1] gains, const double[::1] budgets, const double[::1] eps,
                          double t_wit, int[::1] npos, double[::1] tau, double[::1] dval,
                          double[::1] xw) nogil:
    cdef Py_ssize_t j
    cdef double sup = -1.0, v, lo = 0.0, hi, nu, s = 0.0, ds = 0.0, f, nn
    cdef int it
    for j in range(npos.shape[0]):
        v = budgets[j] * gains[j, 0] / (eps[j] * LN2)
        if sup < 0.0 or v < sup:
            sup = v
    hi = sup
    nu = 0.5 * sup
    for it in range(_MAXIT):
        _maxmin_times(gains, budgets, eps, npos, nu, tau, dval, xw, &s, &ds)
        f = s - t_wit
        if f > 0.0:
            hi = nu
        else:
            lo = nu
        if ds > 0.0:
            nn = nu - f / ds
        else:
            nn = 0.5 * (lo + hi)
        if not (lo < nn < hi):
            nn = 0.5 * (lo + hi)
        if fabs(f) <= 1e-15 * t_wit or hi - lo <= 1e-15 * sup:
            break
        nu = nn
    _maxmin_times(gains, budgets, eps, npos, nu, tau, dval, xw, &s, &ds)
    return nu


cdef void _finish(const double[:, ::1] gains, const double[::1] budgets, const double[::1] eps,
                  int[::1] active, int[::1] npos, double[::1] tau, double[:, ::1] lam,
                  double[::1] rate, double[::1] mu_out) nogil:
    cdef Py_ssize_t j, i
    cdef double p, c
    for j in range(npos.shape[0]):
        if active[j] and tau[j] > 0.0:
            p = budgets[j] / (eps[j] * tau[j])
            mu_out[j] = _waterfill(gains[j], npos[j], p, lam[j])
            c = 0.0
            for i in range(npos[j]):
                if lam[j, i] > 0.0:
                    c += log1p(gains[j, i] * lam[j, i])
            rate[j] = tau[j] * c / LN2
        else:
            tau[j] = 0.0
            for i in range(lam.shape[1]):
                lam[j, i] = 0.0
            rate[j] = 0.0
            mu_out[j] = 0.0


cdef double _solve_inner(const double[:, ::1] gains, const double[::1] budgets, const double[::1] eps,
                         double t_wit, int maxmin, double[::1] tau, double[:, ::1] lam,
                         double[::1] rate, double[::1] sens, double[::1] mu_out,
                         int[::1] npos, int[::1] active, double[::1] dval, double[::1] xw,
                         double* level) nogil:
    cdef Py_ssize_t j, i
    cdef Py_ssize_t k = gains.shape[0]
    cdef int n, any_active = 0, all_active = 1
    cdef double s = 0.0, inv = 0.0, obj = 0.0
    for j in range(k):
        n = 0
        for i in range(gains.shape[1]):
            if gains[j, i] > 0.0:
                n += 1
            else:
                break
        npos[j] = n
        active[j] = 1 if (budgets[j] > 0.0 and n > 0) else 0
        any_active = any_active or active[j]
        all_active = all_active and active[j]
        tau[j] = 0.0
        sens[j] = 0.0
        xw[j] = _NO_START
        for i in range(lam.shape[1]):
            lam[j, i] = 0.0
    level[0] = 0.0
    if t_wit <= 0.0 or not any_active or (maxmin and not all_active):
        for j in range(k):
            active[j] = 0
        _finish(gains, budgets, eps, active, npos, tau, lam, rate, mu_out)
        return 0.0
    if maxmin:
        level[0] = _maxmin_level(gains, budgets, eps, t_wit, npos, tau, dval, xw)
    else:
        level[0] = _maxsum_level(gains, budgets, eps, t_wit, npos, active, tau, dval, xw)
    for j in range(k):
        s += tau[j]
    if s > 0.0:
        for j in range(k):
            tau[j] *= t_wit / s
    _finish(gains, budgets, eps, active, npos, tau, lam, rate, mu_out)
    if maxmin:
        for j in range(k):
            inv += 1.0 / dval[j]
        obj = rate[0]
        for j in range(k):
            sens[j] = (1.0 / (LN2 * mu_out[j] * eps[j])) / dval[j] / inv
            if rate[j] < obj:
                obj = rate[j]
    else:
        for j in range(k):
            obj += rate[j]
            if tau[j] > 0.0:
                sens[j] = 1.0 / (LN2 * mu_out[j] * eps[j])
    return obj


def solve_inner(gains, budgets, eps, double t_wit, int maxmin, tau, lam, rate, sens, mu_out):
    """See ``_kernels_py.solve_inner``."""
    cdef const double[:, ::1] gv = np.ascontiguousarray(gains, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(budgets, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t k = gv.shape[0]
    cdef int[::1] npos = np.empty(k, dtype=np.intc)
    cdef int[::1] active = np.empty(k, dtype=np.intc)
    cdef double[::1] dval = np.zeros(k)
    cdef double[::1] xw = np.empty(k)
    cdef double level = 0.0, obj
    cdef double[::1] tv = tau
    cdef double[:, ::1] lv = lam
    cdef double[::1] rv = rate
    cdef double[::1] sv = sens
    cdef double[::1] mv = mu_out
    with nogil:
        obj = _solve_inner(gv, bv, ev, t_wit, maxmin, tv, lv, rv, sv, mv, npos, active, dval, xw, &level)
    return obj, level


def batch_objective(gains, budget_matrix, eps, double t_wit, int maxmin):
    """Objective for each row of ``budget_matrix`` (candidates x K)."""
    cdef const double[:, ::1] gv = np.ascontiguousarray(gains, dtype=np.float64)
    cdef const double[:, ::1] bm = np.ascontiguousarray(budget_matrix, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t c = bm.shape[0], k = gv.shape[0], m = gv.shape[1], i
    out_arr = np.empty(c)
    cdef double[::1] out = out_arr
    cdef double[::1] tau = np.empty(k)
    cdef double[:, ::1] lam = np.empty((k, m))
    cdef double[::1] rate = np.empty(k)
    cdef double[::1] sens = np.empty(k)
    cdef double[::1] mu = np.empty(k)
    cdef int[::1] npos = np.empty(k, dtype=np.intc)
    cdef int[::1] active = np.empty(k, dtype=np.intc)
    cdef double[::1] dval = np.zeros(k)
    cdef double[::1] xw = np.empty(k)
    cdef double level
    with nogil:
        for i in range(c):
            out[i] = _solve_inner(gv, bm[i], ev, t_wit, maxmin, tau, lam, rate, sens, mu,
                                  npos, active, dval, xw, &level)
    return out_arr
