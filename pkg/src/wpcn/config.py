"""Scenario configuration: JSON loading, dotted-key overrides, validation."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

__all__ = ["ConfigError", "ScenarioConfig", "DEFAULTS", "parse_override"]


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration values."""


# Table-III style defaults; every key may be overridden from JSON or --set.
DEFAULTS: dict[str, Any] = {
    "antennas": {"n_t": 4, "n_r": 4, "n_u": 2},
    "users": {"count": 4},
    "geometry": {"min_m": 2.0, "max_m": 20.0, "ir_distance_m": 100.0, "breakpoint_m": 5.0},
    "rf": {
        "carrier_hz": 915e6,
        "pathloss_exponent": 3.6,
        "rician_k_db": 3.0,
        "gain_ps_dbi": 10.0,
        "gain_ir_dbi": 2.0,
        "bandwidth_hz": 200e3,
    },
    "noise": {"sigma_n2_dbm": -95.0},
    "csi": {"sigma_est2": 0.05},
    "power": {"p_max_dbm": 35.0, "pa_efficiency": 0.2, "circuit_w": 5e-6},
    "eh": {"M_watts": 0.024, "a_per_watt": 1500.0, "b_watts": 0.0022},
    "slot": {"t_max": 1.0},
    "seed": 0,
}


def _merge(base: dict, update: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        if isinstance(val, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``key=value``; the value is decoded as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"empty key in override {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


@dataclass(frozen=True)
class ScenarioConfig:
    """Nested configuration mapping with dotted-path access.

    Unknown top-level sections are rejected so that typos in override keys
    surface as configuration errors instead of being silently ignored.
    """

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        self.validate()

    # -- construction -------------------------------------------------
    @classmethod
    def from_dict(cls, data: Mapping) -> "ScenarioConfig":
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
        return cls(_merge(DEFAULTS, data))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ScenarioConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top-level JSON value must be an object")
        return cls.from_dict(raw)

    def with_overrides(self, overrides: Mapping[str, Any] | Iterable[tuple[str, Any]]) -> "ScenarioConfig":
        items = overrides.items() if isinstance(overrides, Mapping) else overrides
        data = copy.deepcopy(self.data)
        for key, value in items:
            parts = key.split(".")
            node = data
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    raise ConfigError(f"unknown configuration key: {key}")
                node = node[part]
            if parts[-1] not in node:
                raise ConfigError(f"unknown configuration key: {key}")
            node[parts[-1]] = value
        return ScenarioConfig(data)

    # -- access ---------------------------------------------------------
    def get(self, key: str) -> Any:
        node: Any = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown configuration key: {key}")
            node = node[part]
        return node

    def __getitem__(self, key: str) -> Any:
        return self.get(key)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    # -- validation -----------------------------------------------------
    def validate(self) -> None:
        try:
            n_t, n_r, n_u = (int(self.get(f"antennas.{k}")) for k in ("n_t", "n_r", "n_u"))
            k_users = int(self.get("users.count"))
            d_min, d_max = float(self.get("geometry.min_m")), float(self.get("geometry.max_m"))
            d_ir = float(self.get("geometry.ir_distance_m"))
            d_bp = float(self.get("geometry.breakpoint_m"))
            f_c = float(self.get("rf.carrier_hz"))
            ple = float(self.get("rf.pathloss_exponent"))
            s2 = float(self.get("csi.sigma_est2"))
            pa = float(self.get("power.pa_efficiency"))
            p_c = float(self.get("power.circuit_w"))
            t_max = float(self.get("slot.t_max"))
            float(self.get("power.p_max_dbm"))
            float(self.get("noise.sigma_n2_dbm"))
            float(self.get("rf.rician_k_db"))
            int(self.get("seed"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"non-numeric configuration value: {exc}") from exc
        if min(n_t, n_r, n_u) < 1:
            raise ConfigError("antenna counts must be positive")
        if k_users < 1:
            raise ConfigError("users.count must be positive")
        if not 0 < d_min <= d_max:
            raise ConfigError("geometry requires 0 < min_m <= max_m")
        if d_ir <= 0 or d_bp <= 0:
            raise ConfigError("distances must be positive")
        if f_c <= 0 or ple <= 0:
            raise ConfigError("carrier frequency and path-loss exponent must be positive")
        if s2 < 0:
            raise ConfigError("csi.sigma_est2 must be non-negative")
        if not 0 < pa < 1:
            raise ConfigError("power.pa_efficiency must lie in (0, 1)")
        if p_c < 0 or t_max <= 0:
            raise ConfigError("circuit power must be >= 0 and slot.t_max > 0")
        eh = self.get("eh")
        if not (float(eh["M_watts"]) > 0 and float(eh["a_per_watt"]) > 0 and float(eh["b_watts"]) >= 0):
            raise ConfigError("EH parameters require M > 0, a > 0, b >= 0")
