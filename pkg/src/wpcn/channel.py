"""Channel scenarios, bounded CSI uncertainty and worst-case transforms."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .config import ConfigError, ScenarioConfig
from .eh_model import EhParams

__all__ = [
    "UserChannel",
    "Scenario",
    "SPEED_OF_LIGHT",
    "dbm_to_watt",
    "pathloss_db",
    "trial_seed",
    "generate_scenario",
    "sample_uncertainty",
    "worst_case_singular_values",
    "worst_case_harvest_power",
    "adversarial_perturbation",
    "s_procedure_matrix",
    "s_procedure_certify",
    "s_procedure_multiplier",
    "omega_grid",
]

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True, eq=False)
class UserChannel:
    """Estimated channels of one user plus the radii of their error balls.

    ``g_hat`` is N_T x N_U (power station -> user), ``h_hat`` is N_U x N_R
    (user -> information receiver).  ``g_true``/``h_true`` hold the channel
    realisation the simulator scores against; they are ``None`` for
    hand-built instances.
    """

    g_hat: np.ndarray
    h_hat: np.ndarray
    upsilon: float = 0.0
    rho: float = 0.0
    g_true: np.ndarray | None = None
    h_true: np.ndarray | None = None

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g_hat, dtype=complex))
        h = np.atleast_2d(np.asarray(self.h_hat, dtype=complex))
        if g.shape[1] != h.shape[0]:
            raise ValueError(f"user antenna mismatch: G is {g.shape}, H is {h.shape}")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise ValueError("channel entries must be finite")
        if self.upsilon < 0 or self.rho < 0:
            raise ValueError("uncertainty radii must be non-negative")
        object.__setattr__(self, "g_hat", g)
        object.__setattr__(self, "h_hat", h)
        for name in ("g_true", "h_true"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.atleast_2d(np.asarray(val, dtype=complex)))

    @property
    def gamma_hat(self) -> np.ndarray:
        """Singular values of the estimated uplink channel, descending."""
        return np.linalg.svd(self.h_hat, compute_uv=False)

    def true_perturbation(self) -> tuple[np.ndarray, np.ndarray]:
        """(dG, dH) separating the estimates from the true channel."""
        g = self.g_hat if self.g_true is None else self.g_true
        h = self.h_hat if self.h_true is None else self.h_true
        return g - self.g_hat, h - self.h_hat


@dataclass(frozen=True, eq=False)
class Scenario:
    users: tuple[UserChannel, ...]
    p_max: float
    t_max: float
    sigma_n2: float
    eps: np.ndarray
    p_c: np.ndarray
    eh: tuple[EhParams, ...]
    config: ScenarioConfig | None = field(default=None, repr=False)

    def __post_init__(self):
        k = len(self.users)
        if k == 0:
            raise ValueError("scenario needs at least one user")
        object.__setattr__(self, "users", tuple(self.users))
        eps = np.broadcast_to(np.asarray(self.eps, dtype=float), (k,)).copy()
        p_c = np.broadcast_to(np.asarray(self.p_c, dtype=float), (k,)).copy()
        eh = self.eh
        if isinstance(eh, EhParams):
            eh = (eh,) * k
        eh = tuple(eh)
        if len(eh) != k:
            raise ValueError("need one EhParams per user")
        if not (self.p_max > 0 and self.t_max > 0 and self.sigma_n2 > 0):
            raise ValueError("p_max, t_max and sigma_n2 must be positive")
        if np.any(eps <= 1.0):
            raise ValueError("power-amplifier multipliers must exceed 1")
        if np.any(p_c < 0):
            raise ValueError("circuit power must be non-negative")
        n_t = {u.g_hat.shape[0] for u in self.users}
        n_r = {u.h_hat.shape[1] for u in self.users}
        if len(n_t) != 1 or len(n_r) != 1:
            raise ValueError("all users must share the station antenna counts")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "p_c", p_c)
        object.__setattr__(self, "eh", eh)

    @property
    def k(self) -> int:
        return len(self.users)

    @property
    def n_t(self) -> int:
        return self.users[0].g_hat.shape[0]

    @property
    def n_r(self) -> int:
        return self.users[0].h_hat.shape[1]

    @property
    def n_u(self) -> tuple[int, ...]:
        return tuple(u.g_hat.shape[1] for u in self.users)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def with_users(self, users: Sequence[UserChannel]) -> "Scenario":
        return replace(self, users=tuple(users))


# ---------------------------------------------------------------------------
# scenario generation


def pathloss_db(d: float, carrier_hz: float, exponent: float, breakpoint_m: float = 5.0) -> float:
    """Free-space loss up to the breakpoint, log-distance with ``exponent`` beyond."""
    lam = SPEED_OF_LIGHT / carrier_hz
    d_eff = min(d, breakpoint_m)
    fs = 20.0 * np.log10(4.0 * np.pi * d_eff / lam)
    if d <= breakpoint_m:
        return float(fs)
    return float(fs + 10.0 * exponent * np.log10(d / breakpoint_m))


def trial_seed(seed: int, index: int) -> int:
    """Derive an independent 64-bit seed for work item ``index``.

    The rule is ``blake2b(seed XOR index)`` truncated to 64 bits; it is stable
    across platforms and Python versions.
    """
    mixed = (int(seed) ^ int(index)) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.blake2b(f"{mixed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _ula(n: int, angle: float) -> np.ndarray:
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def _ball_direction(rng: np.random.Generator, shape) -> tuple[np.ndarray, float]:
    """Unit-Frobenius direction and a radius fraction in [0, 1].

    The fraction is exactly 1 with probability 1/2 and otherwise follows the
    uniform-in-ball law ``U**(1/dim)`` (dim = real dimension).
    """
    d = _cn(rng, shape)
    d /= np.linalg.norm(d)
    boundary = rng.random() < 0.5
    u = rng.random()
    frac = 1.0 if boundary else u ** (1.0 / (2 * d.size))
    return d, frac


def generate_scenario(config: ScenarioConfig, seed: int | None = None) -> Scenario:
    """Draw users, fading and estimation errors for one Monte-Carlo trial.

    The true downlink channel is Rician (rank-one ULA line of sight plus
    Rayleigh scatter), the true uplink channel Rayleigh, both scaled by path
    loss and station antenna gains.  Error radii follow the normalised error
    definition on the true channel, and the estimates are ``true - error``
    with errors drawn inside the balls.  All random draws happen in a fixed
    order that does not depend on ``csi.sigma_est2`` or the transmit power, so
    sweeps over those variables are paired.
    """
    if not isinstance(config, ScenarioConfig):
        config = ScenarioConfig.from_dict(config)
    if seed is None:
        seed = int(config["seed"])
    n_t, n_r, n_u = (int(config[f"antennas.{k}"]) for k in ("n_t", "n_r", "n_u"))
    k_users = int(config["users.count"])
    if min(n_t, n_r, n_u, k_users) < 1:
        raise ConfigError("antenna and user counts must be positive")
    d_min, d_max = float(config["geometry.min_m"]), float(config["geometry.max_m"])
    d_ir = float(config["geometry.ir_distance_m"])
    bp = float(config["geometry.breakpoint_m"])
    f_c = float(config["rf.carrier_hz"])
    ple = float(config["rf.pathloss_exponent"])
    k_lin = 10.0 ** (float(config["rf.rician_k_db"]) / 10.0)
    g_ps = float(config["rf.gain_ps_dbi"])
    g_ir = float(config["rf.gain_ir_dbi"])
    s2 = float(config["csi.sigma_est2"])
    scale_err = np.sqrt(s2)

    rng = np.random.default_rng(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    ul_gain = 10.0 ** ((g_ir - pathloss_db(d_ir, f_c, ple, bp)) / 10.0)
    users = []
    for _ in range(k_users):
        d = rng.uniform(d_min, d_max)
        dl_gain = 10.0 ** ((g_ps - pathloss_db(d, f_c, ple, bp)) / 10.0)
        phi_t, phi_u = rng.uniform(-np.pi / 2, np.pi / 2, size=2)
        los = np.outer(_ula(n_t, phi_t), _ula(n_u, phi_u).conj())
        g = np.sqrt(dl_gain) * (np.sqrt(k_lin / (k_lin + 1)) * los
                                + np.sqrt(1.0 / (k_lin + 1)) * _cn(rng, (n_t, n_u)))
        h = np.sqrt(ul_gain) * _cn(rng, (n_u, n_r))
        dir_g, frac_g = _ball_direction(rng, (n_t, n_u))
        dir_h, frac_h = _ball_direction(rng, (n_u, n_r))
        upsilon = scale_err * np.linalg.norm(g, 2)
        rho = scale_err * np.linalg.norm(h, 2)
        g_hat = g - upsilon * frac_g * dir_g
        h_hat = h - rho * frac_h * dir_h
        users.append(UserChannel(g_hat, h_hat, float(upsilon), float(rho), g_true=g, h_true=h))

    eh = EhParams.from_config(config["eh"])
    return Scenario(
        users=tuple(users),
        p_max=dbm_to_watt(float(config["power.p_max_dbm"])),
        t_max=float(config["slot.t_max"]),
        sigma_n2=dbm_to_watt(float(config["noise.sigma_n2_dbm"])),
        eps=np.full(k_users, 1.0 / float(config["power.pa_efficiency"])),
        p_c=np.full(k_users, float(config["power.circuit_w"])),
        eh=(eh,) * k_users,
        config=config,
    )


# ---------------------------------------------------------------------------
# uncertainty sets


def sample_uncertainty(user: UserChannel, count: int, seed=None) -> list[tuple[np.ndarray, np.ndarray]]:
    """Draw ``count`` perturbation pairs inside the users' Frobenius balls.

    Half of the draws (in expectation) sit exactly on the ball boundary.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        dg, fg = _ball_direction(rng, user.g_hat.shape)
        dh, fh = _ball_direction(rng, user.h_hat.shape)
        out.append((user.upsilon * fg * dg, user.rho * fh * dh))
    return out


def worst_case_singular_values(gamma_hat, rho: float) -> np.ndarray:
    """Singular values of the worst uplink channel: ``max(gamma - rho, 0)``."""
    g = np.asarray(gamma_hat, dtype=float)
    if np.any(g < 0) or rho < 0:
        raise ValueError("singular values and radius must be non-negative")
    return np.maximum(g - rho, 0.0)


def _check_unit(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex).ravel()
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise ValueError("beam vector must have unit norm")
    return u


def worst_case_harvest_power(g_hat, u, p: float, upsilon: float) -> float:
    """Minimum of ``Tr(G^H V G)`` over ``||G - g_hat||_F <= upsilon``, ``V = p u u^H``.

    The minimiser shrinks the beam gain ``||g_hat^H u||`` by exactly
    ``upsilon`` (see :func:`adversarial_perturbation`).
    """
    u = _check_unit(u)
    if p < 0 or upsilon < 0:
        raise ValueError("power and radius must be non-negative")
    s = np.linalg.norm(np.asarray(g_hat).conj().T @ u)
    return float(p * max(s - upsilon, 0.0) ** 2)


def adversarial_perturbation(g_hat, u, upsilon: float) -> np.ndarray:
    """Error matrix in the ball attaining :func:`worst_case_harvest_power`."""
    g_hat = np.asarray(g_hat, dtype=complex)
    u = _check_unit(u)
    gv = g_hat.conj().T @ u
    s = np.linalg.norm(gv)
    if s == 0:
        return np.zeros_like(g_hat)
    step = min(upsilon, s)
    return -step * np.outer(u, gv.conj()) / s


# ---------------------------------------------------------------------------
# S-procedure certificate


def s_procedure_matrix(V, omega: float, theta: float, g_hat, upsilon: float) -> np.ndarray:
    """The LMI matrix whose PSD-ness certifies ``theta <= min Tr(G^H V G)``."""
    V = np.asarray(V, dtype=complex)
    g_hat = np.asarray(g_hat, dtype=complex)
    n_t, n_u = g_hat.shape
    if V.shape != (n_t, n_t):
        raise ValueError(f"V must be {n_t}x{n_t}, got {V.shape}")
    n = n_t * n_u
    big_v = np.kron(np.eye(n_u), V)
    u_g = np.hstack([np.eye(n), g_hat.reshape(-1, 1, order="F")])
    ups = u_g.conj().T @ big_v @ u_g
    ups[:n, :n] += omega * np.eye(n)
    ups[n, n] += -omega * upsilon**2 - theta
    return 0.5 * (ups + ups.conj().T)


def s_procedure_certify(V, omega: float, theta: float, g_hat, upsilon: float) -> bool:
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError("V must be square")
    if np.linalg.eigvalsh(0.5 * (V + V.conj().T)).min() < -1e-9:
        raise ValueError("V must be positive semidefinite")
    if omega < 0:
        raise ValueError("omega must be non-negative")
    ups = s_procedure_matrix(V, omega, theta, g_hat, upsilon)
    eig = np.linalg.eigvalsh(ups)
    scale = max(abs(eig[0]), abs(eig[-1]))
    return bool(eig[0] >= -1e-9 * scale)


def omega_grid(points: int = 40, lo: float = 1e-6, hi: float = 1e6) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), points)


def s_procedure_multiplier(g_hat, u, p: float, upsilon: float) -> float:
    """Optimal multiplier for a rank-one ``V = p u u^H``: ``p (||g_hat^H u|| / upsilon - 1)``.

    Returns ``inf`` when ``upsilon == 0`` and 0 when the ball swallows the beam.
    """
    s = np.linalg.norm(np.asarray(g_hat).conj().T @ _check_unit(u))
    if upsilon == 0:
        return float("inf")
    return float(p * max(s / upsilon - 1.0, 0.0))
