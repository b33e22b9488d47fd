"""RF-to-DC energy harvesting transfer functions.

Two models are provided: the conventional linear conversion ``eta * p_rf``
and the logistic (saturating) model normalised so that zero input power
harvests exactly zero.  All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EhParams",
    "harvest_nonlinear",
    "harvest_linear",
    "harvest_derivative",
    "sca_upper_bound",
    "FIG3_PARAMS",
    "SIM_PARAMS",
]

# exp() overflows a double just above 709
_EXP_CLAMP = 700.0


def _logistic(z):
    z = np.clip(z, -_EXP_CLAMP, _EXP_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class EhParams:
    """Parameters of the logistic harvester.

    Parameters
    ----------
    M : float
        Saturation (maximum harvestable) power in Watt.
    a : float
        Slope of the logistic curve in 1/Watt.
    b : float
        Turn-on (inflection) input power in Watt.
    """

    M: float
    a: float
    b: float
    omega: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.M > 0 and self.a > 0 and self.b >= 0):
            raise ValueError(f"invalid EH parameters M={self.M}, a={self.a}, b={self.b}")
        # same code path as the p_rf = 0 evaluation so Phi(0) cancels exactly
        object.__setattr__(self, "omega", float(_logistic(self.a * (0.0 - self.b))))

    @classmethod
    def from_config(cls, eh: dict) -> "EhParams":
        return cls(M=float(eh["M_watts"]), a=float(eh["a_per_watt"]), b=float(eh["b_watts"]))

    def to_config(self) -> dict:
        return {"M_watts": self.M, "a_per_watt": self.a, "b_watts": self.b}


FIG3_PARAMS = EhParams(M=0.024, a=150.0, b=0.014)
SIM_PARAMS = EhParams(M=0.024, a=1500.0, b=0.0022)


def _check_power(p_rf):
    p = np.asarray(p_rf, dtype=float)
    if np.any(p < 0) or np.any(np.isnan(p)):
        raise ValueError("received RF power must be non-negative")
    return p


def _out(p_in, value):
    return float(value) if np.ndim(p_in) == 0 else value


def harvest_nonlinear(p_rf, params: EhParams):
    """Harvested DC power of the logistic model.

    ``Phi(p) = (Psi(p) - M*Omega) / (1 - Omega)`` with
    ``Psi(p) = M / (1 + exp(-a (p - b)))`` and ``Omega = 1/(1 + exp(a b))``.
    ``Phi(0) == 0`` holds exactly because ``Psi(0)`` and ``M*Omega`` are
    evaluated through the same expression.
    """
    p = _check_power(p_rf)
    psi = params.M * _logistic(params.a * (p - params.b))
    phi = (psi - params.M * params.omega) / (1.0 - params.omega)
    return _out(p_rf, phi)


def harvest_linear(p_rf, eta: float):
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"conversion efficiency must lie in [0, 1], got {eta}")
    p = _check_power(p_rf)
    return _out(p_rf, eta * p)


def harvest_derivative(p_rf, params: EhParams):
    """Slope dPhi/dp of the logistic model (always positive)."""
    p = _check_power(p_rf)
    s = _logistic(params.a * (p - params.b))
    d = params.a * params.M * s * (1.0 - s) / (1.0 - params.omega)
    return _out(p_rf, d)


def sca_upper_bound(p_rf, anchor, params: EhParams, *, warn: bool = False):
    """First-order expansion of the logistic model around ``anchor``.

    The expansion upper-bounds ``harvest_nonlinear`` only where the logistic
    curve is concave, i.e. for inputs at or above the turn-on power ``b``.
    With ``warn=True`` an anchor below ``b`` emits a ``RuntimeWarning``.
    """
    p = _check_power(p_rf)
    p0 = _check_power(anchor)
    if warn and np.any(p0 < params.b):
        warnings.warn("SCA anchor below EH turn-on power; tangent is not an upper bound",
                      RuntimeWarning, stacklevel=2)
    val = harvest_nonlinear(p0, params) + harvest_derivative(p0, params) * (p - p0)
    if np.ndim(p_rf) == 0 and np.ndim(anchor) == 0:
        return float(val)
    return val
