"""Solver entry point and pluggable backend registry.

``solve_lp`` dispatches to the bundled simplex by default.  External
solvers plug in through :func:`register_backend`; a scipy/HiGHS backend
ships in-box for problem sizes beyond the bundled solver's comfort zone.
"""

from __future__ import annotations

import threading
from typing import Callable, Protocol

import numpy as np

from .program import LinearProgram, LpError, LpResult, LpStatus, Tolerances, WarmStart
from .simplex import solve_bundled

BackendFn = Callable[[LinearProgram, WarmStart | None, Tolerances], LpResult]

_BACKENDS: dict[str, BackendFn] = {}
_counter_lock = threading.Lock()
_solve_count = 0


def register_backend(name: str, fn: BackendFn) -> None:
    _BACKENDS[name] = fn


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def solve_count() -> int:
    return _solve_count


def reset_solve_count() -> int:
    """Reset and return the global LP-solve counter (per process)."""
    global _solve_count
    with _counter_lock:
        previous = _solve_count
        _solve_count = 0
    return previous


def solve_lp(lp: LinearProgram, warm: WarmStart | None = None,
             tol: Tolerances | None = None, backend: str = "bundled") -> LpResult:
    global _solve_count
    try:
        fn = _BACKENDS[backend]
    except KeyError:
        raise LpError(f"unknown LP backend {backend!r}; "
                      f"available: {', '.join(available_backends())}") from None
    with _counter_lock:
        _solve_count += 1
    return fn(lp, warm, tol or Tolerances())


def _bundled_backend(lp: LinearProgram, warm: WarmStart | None,
                     tol: Tolerances) -> LpResult:
    return solve_bundled(lp, warm, tol)


def _scipy_backend(lp: LinearProgram, warm: WarmStart | None,
                   tol: Tolerances) -> LpResult:
    """HiGHS dual simplex via scipy; basic (vertex) optimal solutions.

    The warm start is ignored, which the interface permits.
    """
    from scipy.optimize import linprog
    import scipy.sparse as sp

    A = lp.columns().tocsr()
    senses = np.array(lp.senses)
    rhs = lp.rhs
    le = senses == "<"
    ge = senses == ">"
    eq = senses == "="
    ub_rows = sp.vstack([A[le], -A[ge]], format="csr") if (le.any() or ge.any()) else None
    ub_rhs = np.concatenate([rhs[le], -rhs[ge]]) if ub_rows is not None else None
    eq_rows = A[eq] if eq.any() else None
    eq_rhs = rhs[eq] if eq_rows is not None else None
    res = linprog(
        c=lp.objective,
        A_ub=ub_rows, b_ub=ub_rhs,
        A_eq=eq_rows, b_eq=eq_rhs,
        bounds=np.column_stack([lp.lb, lp.ub]),
        method="highs-ds",
    )
    status = {
        0: LpStatus.OPTIMAL,
        1: LpStatus.ITERATION_LIMIT,
        2: LpStatus.INFEASIBLE,
        3: LpStatus.UNBOUNDED,
    }.get(res.status, LpStatus.ITERATION_LIMIT)
    x = np.asarray(res.x) if res.x is not None else np.zeros(lp.n_vars)
    objective = float(res.fun) if res.fun is not None else float("nan")
    return LpResult(status=status, x=x, objective=objective,
                    iterations=int(getattr(res, "nit", 0)))


register_backend("bundled", _bundled_backend)
register_backend("scipy", _scipy_backend)
