"""Energy-beam search on the complex unit sphere.

The candidate set holds each user's dominant downlink direction, convex
combinations of those directions on a simplex grid, and any caller hints.
The best candidates are refined by quasi-Newton ascent driven by the
envelope gradient ``dF/du* = sum_k w_k G_k G_k^H u``.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize

from .model import DesignModel

__all__ = ["dominant_directions", "simplex_weights", "candidate_beams", "refine_beam", "search_beam"]


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def dominant_directions(model: DesignModel) -> list[np.ndarray]:
    """Dominant left singular vector of every user's downlink estimate."""
    out = []
    for g in model.g_hat:
        u = np.linalg.svd(g)[0][:, 0]
        out.append(_unit(u.astype(complex)))
    return out


def simplex_weights(k: int, step: float) -> np.ndarray:
    """All weight vectors on the ``k``-simplex with spacing ``step``."""
    n = int(round(1.0 / step))
    rows = []
    for cut in itertools.combinations(range(n + k - 1), k - 1):
        parts = np.diff((-1,) + cut + (n + k - 1,)) - 1
        rows.append(parts / n)
    return np.array(rows, dtype=float)


def candidate_beams(model: DesignModel, hints=()) -> np.ndarray:
    """Candidate beams as the columns of an (N_T, C) array."""
    dirs = dominant_directions(model)
    ref = dirs[0]
    aligned = []
    for d in dirs:
        c = np.vdot(ref, d)
        aligned.append(d * (np.conj(c) / abs(c)) if abs(c) > 1e-12 else d)
    basis = np.stack(aligned, axis=1)
    step = 0.25 if model.k <= 4 else 0.5
    w = simplex_weights(model.k, step) if model.k > 1 else np.ones((1, 1))
    cands = basis @ w.T
    norms = np.linalg.norm(cands, axis=0)
    cands = cands[:, norms > 1e-9] / norms[norms > 1e-9]
    extra = [_unit(np.asarray(h, dtype=complex).ravel()) for h in hints]
    extra = [h for h in extra if h.size == model.n_t and np.linalg.norm(h) > 0]
    if extra:
        cands = np.hstack([np.stack(extra, axis=1), cands])
    return np.ascontiguousarray(cands)


def refine_beam(model: DesignModel, tau0: float, u: np.ndarray, maxmin: bool,
                max_iters: int = 40, gtol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Quasi-Newton ascent from ``u``; returns the final beam and its objective.

    The beam is parametrised as ``v / ||v||`` with ``v`` unconstrained in
    real coordinates, so BFGS runs without constraints.  The gradient is
    the analytic envelope gradient of the inner optimum.  ``gtol`` is
    relative to the starting objective.  Never returns a worse beam than
    ``u``.
    """
    n = u.size
    f0 = model.objective(tau0, u, maxmin)
    if max_iters == 0 or f0 <= 0.0:
        return u, f0

    def fun(x):
        v = x[:n] + 1j * x[n:]
        nv = np.linalg.norm(v)
        w = v / nv
        res = model.solve(tau0, w, maxmin)
        g = model.gradient(tau0, w, res)
        g = (g - w * np.real(np.vdot(w, g))) / nv
        return -res.objective, -2.0 * np.concatenate([g.real, g.imag])

    x0 = np.concatenate([u.real, u.imag])
    out = minimize(fun, x0, jac=True, method="BFGS",
                   options={"gtol": gtol * f0, "maxiter": max_iters})
    v = out.x[:n] + 1j * out.x[n:]
    v = v / np.linalg.norm(v)
    f = model.objective(tau0, v, maxmin)
    if f > f0:
        return v, f
    return u, f0


def search_beam(model: DesignModel, tau0: float, maxmin: bool, cands: np.ndarray,
                starts: int = 2, max_iters: int = 40, warm=()) -> tuple[np.ndarray, float]:
    """Best beam over the candidates, refined from the ``starts`` best ones.

    ``warm`` holds extra starting beams (for example the optimum at a
    neighbouring ``tau0``) that are refined in addition.
    """
    objs = model.batch_objective(tau0, cands, maxmin)
    order = np.argsort(-objs, kind="stable")
    pool = [cands[:, i] for i in order[:starts]]
    pool.extend(warm)
    best_u, best_f = cands[:, order[0]], float(objs[order[0]])
    for u0 in pool:
        u, f = refine_beam(model, tau0, u0, maxmin, max_iters)
        if f > best_f:
            best_u, best_f = u, f
    return best_u, best_f
