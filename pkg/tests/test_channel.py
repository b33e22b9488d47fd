import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpcn import ScenarioConfig, generate_scenario
from wpcn.channel import (
    adversarial_perturbation,
    dbm_to_watt,
    omega_grid,
    pathloss_db,
    s_procedure_certify,
    s_procedure_multiplier,
    sample_uncertainty,
    trial_seed,
    worst_case_harvest_power,
    worst_case_singular_values,
)

from _helpers import crandn


def unit(v):
    return v / np.linalg.norm(v)


def test_dbm_conversion():
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(35.0) == pytest.approx(3.16227766, rel=1e-8)


def test_pathloss_continuous_at_breakpoint():
    a = pathloss_db(5.0 - 1e-9, 915e6, 3.6)
    b = pathloss_db(5.0 + 1e-9, 915e6, 3.6)
    assert a == pytest.approx(b, abs=1e-6)
    assert pathloss_db(20.0, 915e6, 3.6) > pathloss_db(10.0, 915e6, 3.6)


def test_trial_seed_stable_and_distinct():
    seeds = {trial_seed(0, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert trial_seed(7, 3) == trial_seed(7, 3)
    assert trial_seed(7, 3) != trial_seed(8, 3)


def test_generate_shapes_and_determinism(smoke_config):
    a = generate_scenario(smoke_config, 11)
    b = generate_scenario(smoke_config, 11)
    assert a.k == 2 and a.n_t == 3 and a.n_r == 2 and a.n_u == (2, 2)
    for ua, ub in zip(a.users, b.users):
        assert np.array_equal(ua.g_hat, ub.g_hat) and np.array_equal(ua.h_true, ub.h_true)


def test_radii_follow_true_channel_norm():
    cfg = ScenarioConfig.from_dict({"csi": {"sigma_est2": 0.1}})
    scn = generate_scenario(cfg, 3)
    for u in scn.users:
        assert u.upsilon == pytest.approx(np.sqrt(0.1) * np.linalg.norm(u.g_true, 2))
        assert u.rho == pytest.approx(np.sqrt(0.1) * np.linalg.norm(u.h_true, 2))
        dg, dh = u.true_perturbation()
        assert np.linalg.norm(dg) <= u.upsilon * (1 + 1e-12)
        assert np.linalg.norm(dh) <= u.rho * (1 + 1e-12)


def test_sweeps_over_csi_error_and_power_are_paired():
    base = ScenarioConfig.from_dict({})
    a = generate_scenario(base.with_overrides({"csi.sigma_est2": 0.0}), 5)
    b = generate_scenario(base.with_overrides({"csi.sigma_est2": 0.15, "power.p_max_dbm": 20}), 5)
    for ua, ub in zip(a.users, b.users):
        assert np.array_equal(ua.g_true, ub.g_true)
        assert np.array_equal(ua.h_true, ub.h_true)
    # zero error variance means perfect estimates
    assert all(np.array_equal(u.g_hat, u.g_true) and u.upsilon == 0 for u in a.users)


def test_sample_uncertainty_inside_balls(smoke_scenario):
    user = smoke_scenario.users[0]
    draws = sample_uncertainty(user, 200, seed=1)
    norms = np.array([[np.linalg.norm(dg), np.linalg.norm(dh)] for dg, dh in draws])
    assert np.all(norms[:, 0] <= user.upsilon * (1 + 1e-12))
    assert np.all(norms[:, 1] <= user.rho * (1 + 1e-12))
    assert np.isclose(norms[:, 0], user.upsilon).sum() > 50  # boundary mass
    with pytest.raises(ValueError):
        sample_uncertainty(user, 0)


def test_shrinkage_clips_at_zero():
    assert np.array_equal(worst_case_singular_values([3.0, 1.0, 0.2], 0.5), [2.5, 0.5, 0.0])
    with pytest.raises(ValueError):
        worst_case_singular_values([1.0], -1.0)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.9))
def test_shrunk_singular_values_lower_bound_ball(seed, frac):
    rng = np.random.default_rng(seed)
    h = crandn(rng, (2, 3))
    rho = frac * np.linalg.norm(h, 2)
    floor = worst_case_singular_values(np.linalg.svd(h, compute_uv=False), rho)
    for _ in range(50):
        d = crandn(rng, h.shape)
        d *= rho * rng.random() / np.linalg.norm(d)
        assert np.all(np.linalg.svd(h + d, compute_uv=False) >= floor - 1e-12)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2.0))
def test_worst_case_harvest_is_a_floor_and_attained(seed, frac):
    rng = np.random.default_rng(seed)
    g = crandn(rng, (3, 2))
    u = unit(crandn(rng, 3))
    ups = frac * np.linalg.norm(g.conj().T @ u)
    wc = worst_case_harvest_power(g, u, 2.0, ups)
    d = crandn(rng, (500, 3, 2))
    d *= (ups * rng.random(500) / np.linalg.norm(d, axis=(1, 2)))[:, None, None]
    recv = 2.0 * np.linalg.norm(np.einsum("cij,i->cj", (g[None] + d).conj(), u), axis=1) ** 2
    scale = 2.0 * np.linalg.norm(g.conj().T @ u) ** 2
    assert recv.min() >= wc - 1e-12 * scale
    dg = adversarial_perturbation(g, u, ups)
    assert np.linalg.norm(dg) <= ups * (1 + 1e-12)
    assert 2.0 * np.linalg.norm((g + dg).conj().T @ u) ** 2 == pytest.approx(wc, abs=1e-12 * scale)


def test_non_unit_beam_rejected():
    with pytest.raises(ValueError):
        worst_case_harvest_power(np.ones((2, 1)), np.ones(2), 1.0, 0.1)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.5))
def test_s_procedure_brackets_closed_form(seed, frac):
    rng = np.random.default_rng(seed)
    g = crandn(rng, (3, 2))
    u = unit(crandn(rng, 3))
    ups = frac * np.linalg.norm(g.conj().T @ u)
    p = 1.5
    v = p * np.outer(u, u.conj())
    wc = worst_case_harvest_power(g, u, p, ups)
    w_star = s_procedure_multiplier(g, u, p, ups)
    omegas = np.append(omega_grid(), w_star)
    assert s_procedure_certify(v, w_star, wc * (1 - 1e-6), g, ups)
    assert not any(s_procedure_certify(v, w, wc * 1.1, g, ups) for w in omegas)


def test_s_procedure_without_uncertainty_certifies_nominal_power(rng):
    g = crandn(rng, (2, 2))
    u = unit(crandn(rng, 2))
    v = np.outer(u, u.conj())
    nominal = np.linalg.norm(g.conj().T @ u) ** 2
    # with a zero radius only a large multiplier makes the LMI feasible
    assert s_procedure_certify(v, omega_grid()[-1], nominal * (1 - 1e-4), g, 0.0)
    assert s_procedure_multiplier(g, u, 1.0, 0.0) == float("inf")


def test_s_procedure_input_checks(rng):
    g = crandn(rng, (2, 2))
    with pytest.raises(ValueError):
        s_procedure_certify(np.eye(3), 1.0, 0.1, g, 0.1)
    with pytest.raises(ValueError):
        s_procedure_certify(-np.eye(2), 1.0, 0.1, g, 0.1)
    with pytest.raises(ValueError):
        s_procedure_certify(np.eye(2), -1.0, 0.1, g, 0.1)
