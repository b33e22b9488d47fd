"""Backend selection for the inner solver.

The compiled extension is used when it has been built; otherwise, or when
``WPCN_PURE_PYTHON=1`` is set, the pure-Python twin is used.  Both expose
``solve_inner``, ``batch_objective``, ``waterfill_sorted``,
``level_for_marginal`` and ``level_for_rate_per_power``.
"""

from __future__ import annotations

import os

from . import _kernels_py as python_backend

compiled_backend = None
try:
    from . import _kernels as compiled_backend  # type: ignore[no-redef]
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("WPCN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    backend = compiled_backend
else:
    backend = python_backend

BACKEND_NAME = "cython" if backend is compiled_backend and backend is not None else "python"

solve_inner = backend.solve_inner
batch_objective = backend.batch_objective
waterfill_sorted = backend.waterfill_sorted
level_for_marginal = backend.level_for_marginal
level_for_rate_per_power = backend.level_for_rate_per_power

__all__ = [
    "BACKEND_NAME",
    "backend",
    "python_backend",
    "compiled_backend",
    "solve_inner",
    "batch_objective",
    "waterfill_sorted",
    "level_for_marginal",
    "level_for_rate_per_power",
]
