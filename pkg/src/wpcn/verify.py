"""Self-check suites run by ``wpcn verify``.

Each suite compares a solver component with an independent oracle on a
handful of seeded random instances and returns named pass/fail checks.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from .allocator import SolverOptions, solve, verify_kkt, waterfill
from .channel import (
    adversarial_perturbation,
    generate_scenario,
    omega_grid,
    s_procedure_certify,
    s_procedure_multiplier,
    trial_seed,
    worst_case_harvest_power,
)
from .config import ScenarioConfig
from .eh_model import SIM_PARAMS, harvest_derivative, harvest_nonlinear

__all__ = ["Check", "SUITES", "run_suites", "smoke_config_path", "load_smoke_config"]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def smoke_config_path() -> str:
    return str(resources.files("wpcn") / "data" / "smoke.json")


def load_smoke_config() -> ScenarioConfig:
    return ScenarioConfig.load(smoke_config_path())


def _rand_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _unit(rng, n):
    u = _rand_complex(rng, n)
    return u / np.linalg.norm(u)


def suite_eh(config: ScenarioConfig, seed: int) -> list[Check]:
    p = np.linspace(0.0, 10 * SIM_PARAMS.b, 1000)
    phi = harvest_nonlinear(p, SIM_PARAMS)
    h = 1e-8 * np.maximum(1.0, p[1:])
    fd = (harvest_nonlinear(p[1:] + h, SIM_PARAMS) - harvest_nonlinear(p[1:] - h, SIM_PARAMS)) / (2 * h)
    exact = harvest_derivative(p[1:], SIM_PARAMS)
    # scaled by the peak slope: deep in saturation the slope underflows and
    # the difference quotient is pure rounding noise
    rel = np.max(np.abs(fd - exact)) / np.max(exact)
    return [
        Check("eh", "zero_input", harvest_nonlinear(0.0, SIM_PARAMS) == 0.0),
        Check("eh", "strictly_increasing", bool(np.all(np.diff(phi) > 0))),
        Check("eh", "below_saturation", bool(np.all((phi >= 0) & (phi < SIM_PARAMS.M)))),
        Check("eh", "derivative_vs_fd", bool(rel < 1e-5), f"max rel err {rel:.2e}"),
    ]


def suite_waterfill(config: ScenarioConfig, seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        g = rng.exponential(1.0, size=2) * 10 ** rng.uniform(-1, 1)
        budget = rng.uniform(0.1, 5.0)
        lam = waterfill(g, budget).powers
        x = np.linspace(0.0, budget, 100_001)
        grid = np.log2(1 + g[0] * x) + np.log2(1 + g[1] * (budget - x))
        mine = float(np.sum(np.log2(1 + g * lam)))
        worst = max(worst, float(grid.max()) - mine)
    return [Check("waterfill", "grid_oracle", worst < 1e-6, f"max shortfall {worst:.2e}")]


def suite_worst_case(config: ScenarioConfig, seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    ok_floor = ok_witness = True
    gap = 0.0
    for _ in range(5):
        g = _rand_complex(rng, (3, 2))
        u = _unit(rng, 3)
        ups = rng.uniform(0.05, 0.5) * np.linalg.norm(g)
        wc = worst_case_harvest_power(g, u, 1.0, ups)
        d = _rand_complex(rng, (2000, 3, 2))
        d *= (ups * rng.uniform(0, 1, 2000) ** (1 / 12) / np.linalg.norm(d, axis=(1, 2)))[:, None, None]
        recv = np.linalg.norm(np.einsum("cij,i->cj", (g[None] + d).conj(), u), axis=1) ** 2
        ok_floor &= bool(recv.min() >= wc - 1e-12)
        dg = adversarial_perturbation(g, u, ups)
        att = float(np.linalg.norm((g + dg).conj().T @ u) ** 2)
        # wc is 0 when the ball swallows the beam, so compare on the scale
        # of the nominal received power
        gap = max(gap, abs(att - wc) / float(np.linalg.norm(g.conj().T @ u) ** 2))
        ok_witness &= gap < 1e-9
    return [
        Check("worst_case", "sampling_floor", ok_floor),
        Check("worst_case", "adversarial_witness", ok_witness, f"max rel gap {gap:.2e}"),
    ]


def suite_s_procedure(config: ScenarioConfig, seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    below = above = True
    for _ in range(5):
        g = _rand_complex(rng, (3, 2))
        u = _unit(rng, 3)
        ups = rng.uniform(0.05, 0.3) * np.linalg.norm(g, 2)
        v = np.outer(u, u.conj())
        wc = worst_case_harvest_power(g, u, 1.0, ups)
        omegas = np.append(omega_grid(), s_procedure_multiplier(g, u, 1.0, ups))
        below &= any(s_procedure_certify(v, w, wc * (1 - 1e-6), g, ups) for w in omegas)
        above &= not any(s_procedure_certify(v, w, wc * 1.1, g, ups) for w in omegas)
    return [
        Check("s_procedure", "certifies_below", bool(below)),
        Check("s_procedure", "rejects_above", bool(above)),
    ]


def suite_kkt(config: ScenarioConfig, seed: int) -> list[Check]:
    out = []
    worst: dict[str, float] = {}
    for objective in ("max_sum", "max_min"):
        for i in range(2):
            scn = generate_scenario(config, trial_seed(seed, i))
            rep = solve(scn, SolverOptions(objective=objective, tau0_grid_points=20))
            for k, v in verify_kkt(rep, scn).items():
                worst[k] = max(worst.get(k, 0.0), v)
    for k, v in worst.items():
        out.append(Check("kkt", k, v < 1e-6, f"max residual {v:.2e}"))
    return out


SUITES: dict[str, Callable[[ScenarioConfig, int], list[Check]]] = {
    "eh": suite_eh,
    "waterfill": suite_waterfill,
    "worst_case": suite_worst_case,
    "s_procedure": suite_s_procedure,
    "kkt": suite_kkt,
}


def run_suites(names=None, config: ScenarioConfig | None = None, seed: int | None = None) -> list[Check]:
    """Run the named suites (all by default) and return every check."""
    names = list(SUITES) if not names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s) {unknown}; available: {sorted(SUITES)}")
    cfg = config if config is not None else load_smoke_config()
    if seed is None:
        seed = int(os.environ.get("WPCN_SEED", cfg["seed"]))
    checks = []
    for n in names:
        checks.extend(SUITES[n](cfg, seed))
    return checks
