"""Bundled LP solver: revised primal simplex with bounded variables.

Two-phase method with one artificial column per row, a dense maintained
basis inverse (product-form updates, periodic refactorization), Dantzig
pricing, and Bland's rule as a fallback once a run of degenerate pivots
suggests cycling.  Optimal solutions are vertex (basic) solutions.

">=" rows are negated to "<=" at standardization; "=" rows keep a
[0, 0]-bounded slack so every row reads  a.x + s = b.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .program import LinearProgram, LpError, LpResult, LpStatus, Tolerances, WarmStart

AT_LB, AT_UB, BASIC, FREE = 0, 1, 2, 3

_REFACTOR_EVERY = 128
_DEGEN_STREAK_LIMIT = 100
_DEGEN_STEP = 1e-11


class _Standardized:
    """min c.x  s.t.  A x + s = b  with column layout [structural|slack|artificial]."""

    def __init__(self, lp: LinearProgram):
        m, n = lp.n_rows, lp.n_vars
        self.m, self.n = m, n
        csc = lp.columns().copy()
        senses = lp.senses
        b = lp.rhs.copy()
        flip = np.array([s == ">" for s in senses])
        if flip.any():
            csc = csc.tolil()
            csc[np.flatnonzero(flip), :] *= -1.0
            csc = csc.tocsc()
            b[flip] *= -1.0
        self.b = b
        self.eq_rows = np.array([s == "=" for s in senses])

        import scipy.sparse as sp
        slack = sp.identity(m, format="csc") if m else sp.csc_matrix((0, 0))
        art = sp.identity(m, format="csc") if m else sp.csc_matrix((0, 0))
        self.A = sp.hstack([csc, slack, art], format="csc") if m else csc.tocsc()
        self.A.sort_indices()
        self.indptr = self.A.indptr.astype(np.int32)
        self.indices = self.A.indices.astype(np.int32)
        self.data = np.ascontiguousarray(self.A.data, dtype=np.float64)
        ncols = self.A.shape[1]
        self.col_ids = np.repeat(
            np.arange(ncols, dtype=np.int64), np.diff(self.indptr))

        self.lb = np.concatenate([lp.lb, np.zeros(2 * m)])
        self.ub = np.concatenate([lp.ub, np.full(2 * m, math.inf)])
        # "=" slacks are pinned at zero
        if m:
            eq = np.flatnonzero(self.eq_rows)
            self.ub[n + eq] = 0.0
        self.c2 = np.concatenate([lp.objective, np.zeros(2 * m)])

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return self.indices[lo:hi], self.data[lo:hi]


class RevisedSimplex:
    def __init__(self, lp: LinearProgram, tol: Tolerances | None = None):
        self.tol = tol or Tolerances()
        self.sd = _Standardized(lp)
        self.max_iters = self.tol.iteration_factor * (self.sd.m + self.sd.n)
        self.iterations = 0
        self._scale = 1.0 + (np.abs(self.sd.b).max() if self.sd.m else 0.0)

    # -- state helpers ---------------------------------------------------

    def _nb_values(self) -> np.ndarray:
        vals = np.where(self.vstat == AT_LB, self.lb_eff,
                        np.where(self.vstat == AT_UB, self.ub_eff, 0.0))
        vals[self.basis] = 0.0
        return vals

    def _refactor(self) -> None:
        sd = self.sd
        if sd.m == 0:
            self.binv = np.zeros((0, 0))
            self.xB = np.zeros(0)
            return
        B = sd.A[:, self.basis].toarray()
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise LpError("singular basis encountered") from exc
        resid = sd.b - sd.A @ self._nb_values()
        self.xB = self.binv @ resid
        self.pivots_since_refactor = 0

    def _init_status(self, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
        vstat = np.empty(lb.shape[0], dtype=np.int8)
        lb_fin = np.isfinite(lb)
        ub_fin = np.isfinite(ub)
        vstat[:] = FREE
        vstat[ub_fin] = AT_UB
        vstat[lb_fin] = AT_LB
        return vstat

    def _cold_start(self) -> None:
        sd = self.sd
        n, m = sd.n, sd.m
        self.lb_eff = sd.lb.copy()
        self.ub_eff = sd.ub.copy()
        self.vstat = self._init_status(self.lb_eff, self.ub_eff)
        # artificials are placed per-row below
        struct_slack = np.arange(n + m)
        vals = np.zeros(n + 2 * m)
        vals[struct_slack] = np.where(
            self.vstat[struct_slack] == AT_LB, self.lb_eff[struct_slack],
            np.where(self.vstat[struct_slack] == AT_UB, self.ub_eff[struct_slack], 0.0))
        resid = sd.b - sd.A[:, : n + m] @ vals[: n + m] if m else np.zeros(0)

        self.c1 = np.zeros(n + 2 * m)
        basis = np.empty(m, dtype=np.int64)
        for i in range(m):
            a = n + m + i
            if (not sd.eq_rows[i]) and resid[i] >= 0.0:
                # slack can absorb the residual; artificial stays fixed at 0
                basis[i] = n + i
                self.lb_eff[a] = 0.0
                self.ub_eff[a] = 0.0
                self.vstat[a] = AT_LB
            else:
                basis[i] = a
                if resid[i] >= 0.0:
                    self.lb_eff[a], self.ub_eff[a] = 0.0, math.inf
                    self.c1[a] = 1.0
                else:
                    self.lb_eff[a], self.ub_eff[a] = -math.inf, 0.0
                    self.c1[a] = -1.0
                self.vstat[a] = AT_LB if resid[i] >= 0.0 else AT_UB
        self.basis = basis
        self.vstat[basis] = BASIC
        self.binv = np.eye(m)
        self.xB = resid.copy()
        self.pivots_since_refactor = 0
        self.need_phase1 = bool(self.c1.any())

    def _try_warm_start(self, warm: WarmStart) -> bool:
        sd = self.sd
        n, m = sd.n, sd.m
        if warm.basis is None or m == 0:
            return False
        basis = np.asarray(warm.basis, dtype=np.int64)
        if basis.shape[0] != m or len(set(basis.tolist())) != m:
            return False
        if (basis < 0).any() or (basis >= n + m).any():
            return False
        self.lb_eff = sd.lb.copy()
        self.ub_eff = sd.ub.copy()
        # artificials stay pinned at zero on warm solves
        self.lb_eff[n + m:] = 0.0
        self.ub_eff[n + m:] = 0.0
        vstat = np.empty(n + 2 * m, dtype=np.int8)
        values = np.zeros(n + 2 * m)
        if warm.values is not None and np.asarray(warm.values).shape[0] == n:
            values[:n] = np.asarray(warm.values, dtype=np.float64)
        else:
            values[:n] = np.where(np.isfinite(self.lb_eff[:n]), self.lb_eff[:n], 0.0)
        lo_gap = np.abs(values - self.lb_eff)
        hi_gap = np.abs(self.ub_eff - values)
        vstat[:] = np.where(
            np.isfinite(self.lb_eff) & (lo_gap <= hi_gap), AT_LB,
            np.where(np.isfinite(self.ub_eff), AT_UB, FREE))
        vstat[~np.isfinite(self.lb_eff) & ~np.isfinite(self.ub_eff)] = FREE
        self.vstat = vstat
        self.basis = basis
        self.vstat[basis] = BASIC
        try:
            self._refactor()
        except LpError:
            return False
        ftol = self.tol.feasibility * self._scale
        lo_ok = self.xB >= self.lb_eff[basis] - ftol
        hi_ok = self.xB <= self.ub_eff[basis] + ftol
        if not (lo_ok.all() and hi_ok.all()):
            return False
        self.c1 = np.zeros(n + 2 * m)
        self.need_phase1 = False
        self.pivots_since_refactor = 0
        return True

    # -- core loop --------------------------------------------------------

    def _pick_entering(self, d: np.ndarray, dtol: float, bland: bool) -> int:
        fixed = self.lb_eff == self.ub_eff
        cand = (
            ((self.vstat == AT_LB) & (d < -dtol))
            | ((self.vstat == AT_UB) & (d > dtol))
            | ((self.vstat == FREE) & (np.abs(d) > dtol))
        ) & ~fixed
        idx = np.flatnonzero(cand)
        if idx.size == 0:
            return -1
        if bland:
            return int(idx[0])
        return int(idx[np.argmax(np.abs(d[idx]))])

    def _iterate(self, c: np.ndarray) -> str:
        sd = self.sd
        dtol = self.tol.optimality * max(1.0, float(np.abs(c).max(initial=0.0)))
        d = np.empty(c.shape[0])
        w = np.empty(sd.m)
        degen_streak = 0
        bland = False
        while True:
            if self.iterations >= self.max_iters:
                return LpStatus.ITERATION_LIMIT
            cB = c[self.basis]
            y = cB @ self.binv if sd.m else np.zeros(0)
            kernels.reduced_costs(sd.indptr, sd.indices, sd.data, sd.col_ids, y, c, d)
            j = self._pick_entering(d, dtol, bland)
            if j < 0:
                if self.pivots_since_refactor > 0:
                    self._refactor()
                    continue
                self.duals = y
                return LpStatus.OPTIMAL
            if self.vstat[j] == AT_LB:
                direction = 1.0
            elif self.vstat[j] == AT_UB:
                direction = -1.0
            else:
                direction = 1.0 if d[j] < 0 else -1.0
            idx, vals = sd.column(j)
            kernels.ftran(self.binv, idx, vals, w)
            own_range = self.ub_eff[j] - self.lb_eff[j]
            step, r = kernels.ratio_test(
                w, self.xB, self.lb_eff[self.basis], self.ub_eff[self.basis],
                direction, own_range, self.tol.pivot, bland, self.basis)
            self.iterations += 1
            if r == -2:
                return LpStatus.UNBOUNDED
            if step <= _DEGEN_STEP:
                degen_streak += 1
                if degen_streak >= _DEGEN_STREAK_LIMIT:
                    bland = True
            else:
                degen_streak = 0
                bland = False
            if r == -1:
                # entering variable flips to its opposite bound
                self.xB -= (direction * step) * w
                self.vstat[j] = AT_UB if self.vstat[j] == AT_LB else AT_LB
                continue
            leave = int(self.basis[r])
            if direction * w[r] > 0:
                self.vstat[leave] = AT_LB
                leave_val = self.lb_eff[leave]
            else:
                self.vstat[leave] = AT_UB
                leave_val = self.ub_eff[leave]
            if self.vstat[j] == AT_LB:
                enter_start = self.lb_eff[j]
            elif self.vstat[j] == AT_UB:
                enter_start = self.ub_eff[j]
            else:
                enter_start = 0.0
            self.xB -= (direction * step) * w
            self.xB[r] = enter_start + direction * step
            del leave_val  # leaving variable sits exactly at its bound by construction
            self.basis[r] = j
            self.vstat[j] = BASIC
            kernels.eta_update(self.binv, w, r)
            self.pivots_since_refactor += 1
            if self.pivots_since_refactor >= _REFACTOR_EVERY:
                self._refactor()

    def solve(self, warm: WarmStart | None = None) -> LpResult:
        sd = self.sd
        self.duals = np.zeros(sd.m)
        warm_ok = warm is not None and self._try_warm_start(warm)
        if not warm_ok:
            self._cold_start()
            if self.need_phase1:
                status = self._iterate(self.c1)
                if status != LpStatus.OPTIMAL:
                    if status == LpStatus.UNBOUNDED:
                        raise LpError("phase-1 subproblem unbounded: numerical failure")
                    return self._result(status)
                x = self._assemble()
                infeas = float(self.c1 @ x)
                if infeas > self.tol.feasibility * self._scale:
                    return self._result(LpStatus.INFEASIBLE)
            # pin artificials for phase 2
            self.lb_eff[sd.n + sd.m:] = 0.0
            self.ub_eff[sd.n + sd.m:] = 0.0
        status = self._iterate(sd.c2)
        return self._result(status)

    def _assemble(self) -> np.ndarray:
        x = self._nb_values()
        x[self.basis] = self.xB
        return x

    def _result(self, status: str) -> LpResult:
        x = self._assemble()
        xs = x[: self.sd.n].copy()
        obj = float(self.sd.c2 @ x)
        return LpResult(
            status=status,
            x=xs,
            objective=obj if status in (LpStatus.OPTIMAL, LpStatus.ITERATION_LIMIT) else math.nan,
            iterations=self.iterations,
            duals=self.duals.copy() if status == LpStatus.OPTIMAL else None,
            basis=self.basis.copy(),
        )


def solve_bundled(lp: LinearProgram, warm: WarmStart | None = None,
                  tol: Tolerances | None = None) -> LpResult:
    return RevisedSimplex(lp, tol).solve(warm)


def dual_objective(lp: LinearProgram, result: LpResult) -> float:
    """Weak-duality certificate value from the solver's multipliers.

    Row multipliers are clamped to their sign constraint, so the returned
    value is a true lower bound on the optimum; the certificate is only
    meaningful for results of the bundled solver (status optimal).
    """
    if result.duals is None:
        raise LpError("result carries no duals")
    senses = lp.senses
    y = result.duals.copy()
    sign = np.ones(lp.n_rows)
    for i, s in enumerate(senses):
        if s == ">":
            sign[i] = -1.0
        # "<=" (and negated ">=") rows require y_i <= 0 for a min problem
        if s != "=" and y[i] > 0.0:
            y[i] = 0.0
    b = sign * lp.rhs
    A = lp.columns()
    d = lp.objective - A.T @ (sign * y)
    lb, ub = lp.lb, lp.ub
    total = float(y @ b)
    for j in range(lp.n_vars):
        if d[j] > 0.0:
            if not math.isfinite(lb[j]):
                return -math.inf
            total += d[j] * lb[j]
        elif d[j] < 0.0:
            if not math.isfinite(ub[j]):
                return -math.inf
            total += d[j] * ub[j]
    return total
