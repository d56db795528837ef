"""Linear-program container and result types.

A :class:`LinearProgram` is an immutable-after-build minimization problem
with bounded variables and sparse rows in {<=, =, >=} form.  Solvers and
backends consume the compressed-column view produced by :meth:`columns`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<", "=", ">"
_SENSES = (LE, EQ, GE)


class LpError(ValueError):
    """Malformed program (bad index, bounds, or coefficient)."""


class LpStatus:
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass
class Tolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-9
    pivot: float = 1e-9
    iteration_factor: int = 50


@dataclass(frozen=True)
class WarmStart:
    """Optional starting point; backends may ignore it.

    ``basis`` lists the solver's basic column indices from a previous run
    on a program with identical constraints; ``values`` are variable values
    used to place nonbasic variables at their nearest bound.
    """

    values: np.ndarray | None = None
    basis: np.ndarray | None = None


@dataclass
class LpResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int
    duals: np.ndarray | None = None
    basis: np.ndarray | None = None

    def warm_start(self) -> WarmStart:
        return WarmStart(values=self.x, basis=self.basis)


class LinearProgram:
    """min c.x  s.t.  rows (sense, rhs),  lb <= x <= ub."""

    def __init__(self) -> None:
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: list[float] = []
        self._names: list[str | None] = []
        self._rows_cols: list[list[int]] = []
        self._rows_vals: list[list[float]] = []
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self._csc: sp.csc_matrix | None = None

    # -- construction ----------------------------------------------------

    def add_variable(self, lb: float = 0.0, ub: float = math.inf,
                     obj: float = 0.0, name: str | None = None) -> int:
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise LpError(f"invalid bounds [{lb}, {ub}]")
        if not math.isfinite(obj):
            raise LpError("objective coefficient must be finite")
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._obj.append(float(obj))
        self._names.append(name)
        self._csc = None
        return len(self._lb) - 1

    def add_constraint(self, coeffs: dict[int, float] | list[tuple[int, float]],
                       sense: str, rhs: float) -> int:
        if sense not in _SENSES:
            raise LpError(f"unknown sense {sense!r}")
        if not math.isfinite(rhs):
            raise LpError("rhs must be finite")
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        cols, vals = [], []
        for j, a in items:
            if not 0 <= j < len(self._lb):
                raise LpError(f"constraint references undeclared variable {j}")
            if not math.isfinite(a):
                raise LpError("constraint coefficient must be finite")
            if a != 0.0:
                cols.append(j)
                vals.append(float(a))
        self._rows_cols.append(cols)
        self._rows_vals.append(vals)
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        self._csc = None
        return len(self._rhs) - 1

    def set_objective(self, coeffs: dict[int, float]) -> None:
        for j, a in coeffs.items():
            if not 0 <= j < len(self._lb):
                raise LpError(f"objective references undeclared variable {j}")
            self._obj[j] = float(a)

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        if not 0 <= j < len(self._lb) or lb > ub:
            raise LpError(f"invalid bounds for variable {j}")
        self._lb[j] = float(lb)
        self._ub[j] = float(ub)

    # -- views -----------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self._lb)

    @property
    def n_rows(self) -> int:
        return len(self._rhs)

    @property
    def lb(self) -> np.ndarray:
        return np.asarray(self._lb, dtype=np.float64)

    @property
    def ub(self) -> np.ndarray:
        return np.asarray(self._ub, dtype=np.float64)

    @property
    def objective(self) -> np.ndarray:
        return np.asarray(self._obj, dtype=np.float64)

    @property
    def senses(self) -> list[str]:
        return list(self._sense)

    @property
    def rhs(self) -> np.ndarray:
        return np.asarray(self._rhs, dtype=np.float64)

    def name_of(self, j: int) -> str:
        return self._names[j] or f"x{j}"

    def row_entries(self, i: int) -> list[tuple[int, float]]:
        return list(zip(self._rows_cols[i], self._rows_vals[i]))

    def columns(self) -> sp.csc_matrix:
        """Constraint matrix as CSC (cached)."""
        if self._csc is None:
            rows, cols, vals = [], [], []
            for i, (rc, rv) in enumerate(zip(self._rows_cols, self._rows_vals)):
                rows.extend([i] * len(rc))
                cols.extend(rc)
                vals.extend(rv)
            self._csc = sp.coo_matrix(
                (vals, (rows, cols)), shape=(self.n_rows, self.n_vars),
                dtype=np.float64).tocsc()
        return self._csc

    def with_bounds(self, overrides: dict[int, tuple[float, float]]) -> "LinearProgram":
        """Shallow copy sharing rows, with some variable bounds replaced."""
        clone = LinearProgram.__new__(LinearProgram)
        clone._lb = list(self._lb)
        clone._ub = list(self._ub)
        clone._obj = self._obj
        clone._names = self._names
        clone._rows_cols = self._rows_cols
        clone._rows_vals = self._rows_vals
        clone._sense = self._sense
        clone._rhs = self._rhs
        clone._csc = self._csc
        for j, (lo, hi) in overrides.items():
            if not 0 <= j < len(clone._lb) or lo > hi:
                raise LpError(f"invalid bound override for variable {j}")
            clone._lb[j] = float(lo)
            clone._ub[j] = float(hi)
        return clone

    def with_objective(self, coeffs: dict[int, float], base: float = 0.0) -> "LinearProgram":
        """Shallow copy sharing rows, with the objective vector replaced.

        Coefficients default to ``base`` for variables absent from ``coeffs``.
        """
        clone = LinearProgram.__new__(LinearProgram)
        clone._lb = self._lb
        clone._ub = self._ub
        clone._obj = [base] * len(self._obj)
        clone._names = self._names
        clone._rows_cols = self._rows_cols
        clone._rows_vals = self._rows_vals
        clone._sense = self._sense
        clone._rhs = self._rhs
        clone._csc = self._csc
        for j, a in coeffs.items():
            clone._obj[j] = float(a)
        return clone
