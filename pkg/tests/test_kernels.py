"""The compiled and pure-Python inner solvers must agree."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpcn import kernels

pytestmark = pytest.mark.skipif(kernels.compiled_backend is None, reason="extension not built")

BACKENDS = [kernels.python_backend, kernels.compiled_backend]


def random_instance(seed, k, m):
    rng = np.random.default_rng(seed)
    gains = np.sort(10 ** rng.uniform(8, 13, size=(k, m)), axis=1)[:, ::-1].copy()
    gains[rng.random((k, m)) < 0.15] = 0.0
    gains = np.sort(gains, axis=1)[:, ::-1].copy()
    budgets = rng.uniform(-1e-6, 2e-3, size=k)
    eps = np.full(k, 5.0)
    return gains, budgets, eps


def run(backend, gains, budgets, eps, t_wit, maxmin):
    k, m = gains.shape
    tau, lam, rate, sens, mu = np.empty(k), np.empty((k, m)), np.empty(k), np.empty(k), np.empty(k)
    obj, level = backend.solve_inner(gains, budgets, eps, t_wit, maxmin, tau, lam, rate, sens, mu)
    return obj, level, tau, lam, rate, sens


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 3), st.booleans(),
       st.floats(0.05, 1.0))
def test_backends_agree(seed, k, m, maxmin, t_wit):
    gains, budgets, eps = random_instance(seed, k, m)
    py = run(BACKENDS[0], gains, budgets, eps, t_wit, int(maxmin))
    cy = run(BACKENDS[1], gains, budgets, eps, t_wit, int(maxmin))
    assert cy[0] == pytest.approx(py[0], rel=1e-12, abs=1e-300)
    for a, b in zip(py[2:], cy[2:]):
        np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-18)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(0.0, 10.0))
def test_waterfill_sorted_agree_and_spend_budget(seed, n, budget):
    rng = np.random.default_rng(seed)
    g = np.sort(10 ** rng.uniform(-2, 2, size=n))[::-1].copy()
    out = []
    for be in BACKENDS:
        lam = np.zeros(n)
        mu = be.waterfill_sorted(g, n, budget, lam)
        out.append((mu, lam))
    assert out[0][0] == pytest.approx(out[1][0], rel=1e-14)
    np.testing.assert_allclose(out[0][1], out[1][1], rtol=1e-13, atol=1e-15)
    assert out[1][1].sum() == pytest.approx(budget, rel=1e-12, abs=1e-14)


def test_batch_objective_matches_columnwise_solves():
    gains, _, eps = random_instance(3, 4, 2)
    rng = np.random.default_rng(4)
    bm = rng.uniform(0, 1e-3, size=(6, 4))
    for maxmin in (0, 1):
        for be in BACKENDS:
            batch = be.batch_objective(gains, bm, eps, 0.6, maxmin)
            single = [run(be, gains, bm[c].copy(), eps, 0.6, maxmin)[0] for c in range(6)]
            np.testing.assert_allclose(batch, single, rtol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS, ids=["python", "cython"])
def test_level_helpers_invert(backend):
    g = np.array([4.0, 2.0, 0.5])
    for kappa in (0.01, 0.3, 2.0):
        x = backend.level_for_marginal(g, 3, kappa)
        mu = np.exp(x)
        d = np.sum(np.maximum(np.log(g * mu) - 1 + 1 / (g * mu), 0) * (g * mu > 1)) / np.log(2)
        assert d == pytest.approx(kappa, rel=1e-9)
        # a warm start lands on the same root
        assert backend.level_for_marginal(g, 3, kappa, x + 0.3) == pytest.approx(x, abs=1e-12)


def test_backend_selection_flag():
    assert kernels.BACKEND_NAME in ("cython", "python")
