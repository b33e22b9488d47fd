import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wpcn import EhParams, harvest_derivative, harvest_linear, harvest_nonlinear, sca_upper_bound
from wpcn.eh_model import FIG3_PARAMS, SIM_PARAMS

params_st = st.builds(
    EhParams,
    M=st.floats(1e-3, 1.0),
    a=st.floats(10.0, 5000.0),
    b=st.floats(1e-4, 0.05),
)
power_st = st.floats(0.0, 1.0, allow_nan=False)


def phi_reference(p, M, a, b):
    # textbook form, evaluated independently with math.exp
    psi = M / (1.0 + math.exp(-a * (p - b)))
    omega = 1.0 / (1.0 + math.exp(a * b))
    return (psi - M * omega) / (1.0 - omega)


def test_zero_input_is_exact():
    assert harvest_nonlinear(0.0, FIG3_PARAMS) == 0.0
    assert harvest_nonlinear(0.0, SIM_PARAMS) == 0.0


@pytest.mark.parametrize("p", [1e-4, 0.002, 0.0022, 0.014, 0.05, 0.3])
def test_matches_reference_formula(p):
    for prm in (FIG3_PARAMS, SIM_PARAMS):
        assert harvest_nonlinear(p, prm) == pytest.approx(phi_reference(p, prm.M, prm.a, prm.b), rel=1e-12)


def test_saturates_at_M():
    assert abs(harvest_nonlinear(1.0, FIG3_PARAMS) - FIG3_PARAMS.M) < 1e-6


def test_vectorised_shape_and_scalar_return():
    p = np.linspace(0, 0.1, 7).reshape(7, 1)
    out = harvest_nonlinear(p, SIM_PARAMS)
    assert out.shape == (7, 1)
    assert isinstance(harvest_nonlinear(0.01, SIM_PARAMS), float)


def test_negative_power_rejected():
    with pytest.raises(ValueError):
        harvest_nonlinear(-1e-3, SIM_PARAMS)
    with pytest.raises(ValueError):
        harvest_linear(-1.0, 0.5)
    with pytest.raises(ValueError):
        harvest_linear(1.0, 1.5)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        EhParams(M=-1.0, a=1.0, b=0.1)


def test_extreme_inputs_stay_finite():
    big = harvest_nonlinear(np.array([1e6, 1e300]), SIM_PARAMS)
    assert np.all(np.isfinite(big)) and np.allclose(big, SIM_PARAMS.M)
    assert np.isfinite(harvest_derivative(1e300, SIM_PARAMS))


@given(params_st, power_st, power_st)
def test_monotone_and_bounded(prm, p1, p2):
    lo, hi = sorted((p1, p2))
    f_lo, f_hi = harvest_nonlinear(lo, prm), harvest_nonlinear(hi, prm)
    assert f_lo <= f_hi + 1e-15
    assert 0.0 <= f_lo and f_hi <= prm.M * (1 + 1e-12)


@given(params_st, st.floats(1e-4, 0.2))
def test_derivative_matches_difference_quotient(prm, p):
    h = 1e-7 * max(p, 1e-3) / max(1.0, prm.a * 1e-3)
    fd = (harvest_nonlinear(p + h, prm) - harvest_nonlinear(max(p - h, 0.0), prm)) / (p + h - max(p - h, 0.0))
    d = harvest_derivative(p, prm)
    peak = prm.a * prm.M / 4.0 / (1.0 - prm.omega)
    assert abs(fd - d) <= 1e-5 * peak


@given(params_st, st.floats(0.0, 0.3), st.floats(0.0, 0.3))
def test_tangent_upper_bounds_above_turn_on(prm, p, anchor_offset):
    anchor = prm.b + anchor_offset
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        bound = sca_upper_bound(p, anchor, prm, warn=True)
    if p >= prm.b:
        # concave region: tangent lies above the curve
        assert bound >= harvest_nonlinear(p, prm) - 1e-12 * prm.M


def test_tangent_is_exact_at_anchor():
    for a in (0.001, 0.0022, 0.01):
        assert sca_upper_bound(a, a, SIM_PARAMS) == pytest.approx(harvest_nonlinear(a, SIM_PARAMS), rel=1e-14)


def test_anchor_below_turn_on_warns():
    with pytest.warns(RuntimeWarning):
        sca_upper_bound(0.01, 0.5 * SIM_PARAMS.b, SIM_PARAMS, warn=True)


def test_linear_model():
    assert harvest_linear(0.2, 0.5) == pytest.approx(0.1)
    assert np.allclose(harvest_linear(np.array([0.0, 1.0]), 0.25), [0.0, 0.25])
