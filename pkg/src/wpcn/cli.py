"""Command-line entry point.

Exit status: 0 on success, 1 when a verification check fails, 2 for
configuration or usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .allocator import OBJECTIVES, SCHEMES, SolverOptions, baseline_solve
from .channel import generate_scenario
from .config import ConfigError, ScenarioConfig, parse_override
from .simulator import METRICS, SweepSpec, read_csv, run_sweep, summarize, write_csv, write_trials_csv

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG = 0, 1, 2


def _env_seed() -> int | None:
    raw = os.environ.get("WPCN_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw, 0)
    except ValueError as exc:
        raise ConfigError(f"WPCN_SEED must be an integer, got {raw!r}") from exc


def _load_config(path: str | None, overrides) -> ScenarioConfig:
    cfg = ScenarioConfig.load(path) if path else ScenarioConfig.from_dict({})
    if overrides:
        cfg = cfg.with_overrides([parse_override(o) for o in overrides])
    seed = _env_seed()
    if seed is not None:
        cfg = cfg.with_overrides({"seed": seed})
    return cfg


def cmd_solve(args) -> int:
    cfg = _load_config(args.config, args.set)
    scn = generate_scenario(cfg)
    opts = SolverOptions(scheme=args.scheme, objective=args.objective, tau0_grid_points=args.grid)
    report = baseline_solve(scn, opts)
    print(report.to_json(indent=2 if args.pretty else None))
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = SweepSpec.load(args.spec)
    seed = _env_seed()
    if seed is not None:
        spec = SweepSpec(spec.variable, spec.values, spec.trials, spec.schemes, spec.objectives,
                         spec.base_config, seed, spec.solver)
    os.makedirs(args.out, exist_ok=True)
    table = run_sweep(spec, threads=args.threads)
    summary_path = os.path.join(args.out, "summary.csv")
    write_csv(summarize(table), summary_path)
    if args.raw:
        write_trials_csv(table, os.path.join(args.out, "trials.csv"))
    print(summary_path)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suites

    cfg = ScenarioConfig.load(args.config) if args.config else None
    try:
        checks = run_suites(args.suite, cfg, _env_seed())
    except KeyError as exc:
        raise ConfigError(f"unknown suite; available: {sorted(SUITES)}") from exc
    failed = [c for c in checks if not c.passed]
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.suite}.{c.name}" + (f" ({c.detail})" if c.detail else ""))
    if failed:
        print("failed invariants: " + ", ".join(f"{c.suite}.{c.name}" for c in failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plot import write_svg

    try:
        rows = read_csv(args.summary)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        write_svg(rows, args.metric, args.out)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wpcn", description="Robust resource allocation for wireless-powered networks.")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("solve", help="solve one scenario and print the report as JSON")
    s.add_argument("--config", required=True, help="scenario JSON")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a configuration value; beats the file")
    s.add_argument("--scheme", choices=SCHEMES, default="proposed")
    s.add_argument("--objective", choices=OBJECTIVES, default="max_sum")
    s.add_argument("--grid", type=int, default=50, help="number of WET grid intervals")
    s.add_argument("--pretty", action="store_true")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a Monte-Carlo sweep and write summary.csv")
    w.add_argument("--spec", required=True)
    w.add_argument("--out", required=True, help="output directory")
    w.add_argument("--threads", type=int, default=1, help="worker processes")
    w.add_argument("--raw", action="store_true", help="also write per-trial trials.csv")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run oracle and invariant suites")
    v.add_argument("--suite", action="append", help="suite name (repeatable; all when omitted)")
    v.add_argument("--config", help="scenario JSON (bundled smoke config when omitted)")
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("plot", help="render a summary metric as an SVG line chart")
    q.add_argument("--summary", required=True)
    q.add_argument("--metric", required=True, choices=METRICS)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
