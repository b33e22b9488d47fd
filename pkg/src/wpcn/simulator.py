"""Monte-Carlo sweeps over one system parameter.

Each work item is one (sweep value, trial) pair: it draws a scenario from
a seed that depends only on the trial index, so every sweep value and every
scheme sees the same user drops and fading (paired comparison).  Work items
are pure, so running them in a process pool gives the same table as
running them in order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .allocator import OBJECTIVES, SCHEMES, SolverOptions, baseline_solve
from .channel import generate_scenario, trial_seed
from .config import ConfigError, ScenarioConfig

__all__ = [
    "SWEEP_VARIABLES",
    "METRICS",
    "CSV_COLUMNS",
    "SweepSpec",
    "TrialRow",
    "TrialTable",
    "SummaryRow",
    "run_sweep",
    "summarize",
    "write_csv",
    "read_csv",
    "write_trials_csv",
]

SWEEP_VARIABLES = {
    "p_max_dbm": ("power.p_max_dbm",),
    "users_k": ("users.count",),
    "sigma_est2": ("csi.sigma_est2",),
    "n_t_n_r": ("antennas.n_t", "antennas.n_r"),
    "n_u": ("antennas.n_u",),
}
METRICS = ("sum_achieved", "sum_predicted", "min_achieved", "min_predicted", "tau0")
CSV_COLUMNS = ("sweep_var", "sweep_value", "scheme", "objective", "metric", "mean", "stderr", "trials")


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: a parameter, its values and what to run at each."""

    variable: str
    values: tuple
    trials: int = 200
    schemes: tuple = ("proposed",)
    objectives: tuple = ("max_sum",)
    base_config: ScenarioConfig = field(default_factory=lambda: ScenarioConfig.from_dict({}))
    seed: int = 0
    solver: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.variable!r}; expected one of {sorted(SWEEP_VARIABLES)}")
        values = tuple(self.values)
        if not values:
            raise ConfigError("sweep values must be non-empty")
        if list(values) != sorted(values):
            raise ConfigError("sweep values must be sorted")
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        schemes, objectives = tuple(self.schemes), tuple(self.objectives)
        bad = [s for s in schemes if s not in SCHEMES] + [o for o in objectives if o not in OBJECTIVES]
        if bad or not schemes or not objectives:
            raise ConfigError(f"unknown or missing schemes/objectives: {bad}")
        if not isinstance(self.base_config, ScenarioConfig):
            object.__setattr__(self, "base_config", ScenarioConfig.from_dict(self.base_config))
        solver = dict(self.solver)
        for key in ("scheme", "objective", "beam_hints"):
            if key in solver:
                raise ConfigError(f"solver option {key!r} is set by the sweep itself")
        SolverOptions.from_dict(solver)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "schemes", schemes)
        object.__setattr__(self, "objectives", objectives)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "solver", solver)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: str | os.PathLike | None = None) -> "SweepSpec":
        data = dict(data)
        known = {"variable", "values", "trials", "schemes", "objectives", "base_config", "seed", "solver"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown sweep spec keys: {sorted(extra)}")
        if "variable" not in data or "values" not in data:
            raise ConfigError("sweep spec needs 'variable' and 'values'")
        base = data.pop("base_config", {})
        if isinstance(base, str):
            path = base if base_dir is None or os.path.isabs(base) else os.path.join(base_dir, base)
            base = ScenarioConfig.load(path)
        else:
            base = ScenarioConfig.from_dict(base)
        return cls(base_config=base, **data)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SweepSpec":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read sweep spec {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def config_for(self, value) -> ScenarioConfig:
        keys = SWEEP_VARIABLES[self.variable]
        return self.base_config.with_overrides({k: value for k in keys})


@dataclass(frozen=True)
class TrialRow:
    sweep_value: Any
    trial: int
    scheme: str
    objective: str
    sum_achieved: float
    min_achieved: float
    sum_predicted: float
    min_predicted: float
    tau0: float
    rates: tuple

    def metric(self, name: str) -> float:
        return float(getattr(self, name))


@dataclass
class TrialTable:
    spec: SweepSpec
    rows: list

    def __len__(self) -> int:
        return len(self.rows)

    def select(self, value=None, scheme=None, objective=None) -> list:
        return [r for r in self.rows
                if (value is None or r.sweep_value == value)
                and (scheme is None or r.scheme == scheme)
                and (objective is None or r.objective == objective)]

    def mean(self, metric: str, value=None, scheme=None, objective=None) -> float:
        rows = self.select(value, scheme, objective)
        return float(np.mean([r.metric(metric) for r in rows]))


@dataclass(frozen=True)
class SummaryRow:
    sweep_var: str
    sweep_value: Any
    scheme: str
    objective: str
    metric: str
    mean: float
    stderr: float
    trials: int


# ---------------------------------------------------------------------------
# running


def _scheme_order(schemes: Sequence[str]) -> list[str]:
    # the proposed design runs first so the perfect-CSI benchmark can start
    # from its beam
    return sorted(schemes, key=lambda s: 0 if s == "proposed" else 1)


def _work_item(args) -> list[TrialRow]:
    spec, vi, trial = args
    value = spec.values[vi]
    cfg = spec.config_for(value)
    scn = generate_scenario(cfg, trial_seed(spec.seed, trial))
    t_max = scn.t_max
    rows = []
    for objective in spec.objectives:
        hints = ()
        done = {}
        for scheme in _scheme_order(spec.schemes):
            opts = SolverOptions.from_dict({**spec.solver, "scheme": scheme, "objective": objective,
                                            "beam_hints": hints if scheme == "perfect_csi" else ()})
            rep = baseline_solve(scn, opts)
            if scheme == "proposed":
                hints = (rep.policy.beam,)
            # throughput in bits/s/Hz: bits per slot divided by the slot length
            achieved = np.asarray(rep.achieved_rates) / t_max
            predicted = rep.policy.rates / t_max
            done[scheme] = TrialRow(
                sweep_value=value,
                trial=trial,
                scheme=scheme,
                objective=objective,
                sum_achieved=float(achieved.sum()),
                min_achieved=float(achieved.min()),
                sum_predicted=float(predicted.sum()),
                min_predicted=float(predicted.min()),
                tau0=float(rep.policy.tau0),
                rates=tuple(float(x) for x in achieved),
            )
        rows.extend(done[s] for s in spec.schemes)
    return rows


def run_sweep(spec: SweepSpec, threads: int = 1) -> TrialTable:
    """Run every (value, trial, scheme, objective) combination.

    Rows are ordered by sweep value, trial, objective and scheme regardless
    of ``threads``.
    """
    items = [(spec, vi, t) for vi in range(len(spec.values)) for t in range(spec.trials)]
    threads = max(1, int(threads))
    if threads == 1 or len(items) == 1:
        results = [_work_item(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_work_item, items, chunksize=max(1, len(items) // (8 * threads))))
    rows = [r for chunk in results for r in chunk]
    return TrialTable(spec, rows)


# ---------------------------------------------------------------------------
# summaries and CSV


def summarize(table: TrialTable, metrics: Iterable[str] = METRICS) -> list[SummaryRow]:
    """Mean and standard error over trials per (value, scheme, objective, metric).

    The standard error uses the sample standard deviation (``ddof=1``) and
    is 0 for a single trial.  Means are reduced in trial order.
    """
    if not table.rows:
        raise ValueError("cannot summarise an empty table")
    metrics = tuple(metrics)
    groups: dict = {}
    order = []
    for r in table.rows:
        key = (r.sweep_value, r.scheme, r.objective)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    out = []
    var = table.spec.variable
    for value, scheme, objective in order:
        rows = sorted(groups[(value, scheme, objective)], key=lambda r: r.trial)
        n = len(rows)
        for m in metrics:
            x = np.array([r.metric(m) for r in rows])
            mean = math.fsum(x) / n
            se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            out.append(SummaryRow(var, value, scheme, objective, m, mean, se, n))
    return out


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.9g}"


def write_csv(rows: Iterable[SummaryRow], path: str | os.PathLike) -> None:
    """Write summary rows with 9 significant digits."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in rows:
                w.writerow([r.sweep_var, _fmt(r.sweep_value), r.scheme, r.objective, r.metric,
                            _fmt(r.mean), _fmt(r.stderr), int(r.trials)])
    except OSError as exc:
        raise OSError(f"cannot write summary CSV {path}: {exc}") from exc


def read_csv(path: str | os.PathLike) -> list[SummaryRow]:
    """Parse a file written by :func:`write_csv`."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
            return [SummaryRow(r["sweep_var"], float(r["sweep_value"]), r["scheme"], r["objective"],
                               r["metric"], float(r["mean"]), float(r["stderr"]), int(r["trials"]))
                    for r in reader]
    except OSError as exc:
        raise OSError(f"cannot read summary CSV {path}: {exc}") from exc


def write_trials_csv(table: TrialTable, path: str | os.PathLike) -> None:
    """Raw per-trial table, one row per (value, trial, scheme, objective)."""
    cols = ["sweep_var", "sweep_value", "trial", "scheme", "objective",
            "sum_achieved", "min_achieved", "sum_predicted", "min_predicted", "tau0", "rates"]
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in table.rows:
                w.writerow([table.spec.variable, _fmt(r.sweep_value), r.trial, r.scheme, r.objective,
                            _fmt(r.sum_achieved), _fmt(r.min_achieved), _fmt(r.sum_predicted),
                            _fmt(r.min_predicted), _fmt(r.tau0), " ".join(_fmt(x) for x in r.rates)])
    except OSError as exc:
        raise OSError(f"cannot write trial CSV {path}: {exc}") from exc
