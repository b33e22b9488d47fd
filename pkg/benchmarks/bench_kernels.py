"""Compare the compiled and pure-Python inner solvers.

Times ``solve_inner`` on random K-user instances for both objectives,
checks that the two backends agree, and prints a small table.  Also times a
full grid-search solve with whichever backend ``wpcn.kernels`` selected.

Usage::

    python benchmarks/bench_kernels.py [--users 4] [--modes 2] [--repeat 200]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from wpcn import ScenarioConfig, generate_scenario, kernels
from wpcn.allocator import SolverOptions, solve


def instance(rng, k, m):
    gains = np.sort(10 ** rng.uniform(8, 13, size=(k, m)), axis=1)[:, ::-1].copy()
    budgets = rng.uniform(1e-5, 2e-3, size=k)
    return gains, budgets, np.full(k, 5.0)


def run(backend, gains, budgets, eps, maxmin):
    k, m = gains.shape
    tau, lam, rate, sens, mu = np.empty(k), np.empty((k, m)), np.empty(k), np.empty(k), np.empty(k)
    obj, _ = backend.solve_inner(gains, budgets, eps, 0.6, maxmin, tau, lam, rate, sens, mu)
    return obj, tau


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=4)
    ap.add_argument("--modes", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    cases = [instance(rng, args.users, args.modes) for _ in range(args.repeat)]
    backends = [("python", kernels.python_backend)]
    if kernels.compiled_backend is not None:
        backends.append(("cython", kernels.compiled_backend))
    else:
        print("compiled extension not built; timing the Python backend only")

    print(f"solve_inner, K={args.users}, m={args.modes}, {args.repeat} instances")
    print(f"{'objective':<10}{'backend':<9}{'us/call':>10}{'speed-up':>10}")
    for maxmin, label in ((0, "max_sum"), (1, "max_min")):
        per_call = {}
        for name, be in backends:
            t = timeit.timeit(lambda: [run(be, *c, maxmin) for c in cases], number=3)
            per_call[name] = t / (3 * len(cases)) * 1e6
        for name, _ in backends:
            speed = per_call["python"] / per_call[name]
            print(f"{label:<10}{name:<9}{per_call[name]:>10.1f}{speed:>9.1f}x")
        if len(backends) == 2:
            diff = max(abs(run(backends[0][1], *c, maxmin)[0] - run(backends[1][1], *c, maxmin)[0])
                       / max(abs(run(backends[0][1], *c, maxmin)[0]), 1e-300) for c in cases)
            print(f"{'':<10}max relative objective difference {diff:.1e}")

    cfg = ScenarioConfig.from_dict({"users": {"count": args.users}})
    scn = generate_scenario(cfg, 1)
    for objective in ("max_sum", "max_min"):
        opts = SolverOptions(objective=objective)
        t = timeit.timeit(lambda: solve(scn, opts), number=3) / 3
        print(f"full solve ({objective}, backend {kernels.BACKEND_NAME}): {t * 1e3:.0f} ms")


if __name__ == "__main__":
    main()
