"""LP builders: relaxation, penalty subproblem, routing repair; penalty math.

Variable families (see :class:`VariableIndex` keys):

* ``("r", k, s, li)``  rate of flow k's stage-s virtual flow on link li,
  s running 0..n (stage s has received the first s chain functions);
* ``("x", k, s, i)``   relaxed placement of flow k's position-s function
  on node i (1-based positions);
* ``("xf", i, f)`` / ``("xn", i)``  aggregate activity variables used by
  the strengthened relaxation;
* ``("delta",)``       shared worst link overload in the repair program.

Conservation is emitted as net conservation of every virtual flow at
every node.  For positions s = 1..n two row families are written, one
balancing the stage-(s-1) flow (absorption side) and one balancing the
stage-s flow (emission side); interior stages therefore appear twice,
which is redundant but harmless and keeps one row family per position.
Empty chains get the single stage-0 family.  Rates of stage 0 into the
source and of stage n out of the destination are pinned to zero, which
rules out degenerate cycles without changing the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import reachability
from .lp import LinearProgram
from .model import FractionalPlacement, Placement, ProblemInstance, RoutingPlan

VarKey = tuple


class StructuralInfeasibleError(RuntimeError):
    """No path exists between consecutive placed nodes; no overload can fix it."""

    def __init__(self, flow_id: str, segment: tuple[str, str]):
        self.flow_id = flow_id
        self.segment = segment
        super().__init__(
            f"flow {flow_id!r}: no directed path {segment[0]!r} -> {segment[1]!r}")


class VariableIndex:
    """Bijective map between LP columns and semantic variable keys."""

    def __init__(self) -> None:
        self.keys: list[VarKey] = []
        self.index: dict[VarKey, int] = {}

    def add(self, key: VarKey) -> int:
        if key in self.index:
            raise ValueError(f"duplicate variable key {key!r}")
        col = len(self.keys)
        self.keys.append(key)
        self.index[key] = col
        return col

    def col(self, key: VarKey) -> int:
        return self.index[key]

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: VarKey) -> bool:
        return key in self.index


@dataclass(frozen=True)
class PenaltyParams:
    p: float = 0.5
    eps: float = 1e-3
    sigma: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.eps < 0.0:
            raise ValueError("eps must be nonnegative")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")


# -- penalty quantities ----------------------------------------------------


def block_constant(m: int, p: float, eps: float) -> float:
    """Optimal block value (1+eps)^p + (m-1) eps^p of the concave block program."""
    return (1.0 + eps) ** p + (m - 1) * eps ** p


def penalty_value(instance: ProblemInstance, x: FractionalPlacement,
                  p: float, eps: float) -> float:
    """Sum over blocks of ||x_block + eps*1||_p^p minus the block constant.

    Nonnegative on block-sum-one placements, zero exactly on binary ones.
    """
    total = 0.0
    for k, flow in enumerate(instance.flows):
        for s, f in enumerate(flow.chain, start=1):
            members = instance.candidates(f)
            acc = 0.0
            for i in members:
                acc += (x.values.get((k, s, i), 0.0) + eps) ** p
            total += acc - block_constant(len(members), p, eps)
    return total


def penalty_gradient(instance: ProblemInstance, x: FractionalPlacement,
                     p: float, eps: float) -> dict[tuple[int, int, int], float]:
    """Entrywise derivative p (x + eps)^(p-1); requires eps > 0."""
    if eps <= 0.0:
        raise ValueError("gradient requires eps > 0")
    grad: dict[tuple[int, int, int], float] = {}
    for k, flow in enumerate(instance.flows):
        for s, f in enumerate(flow.chain, start=1):
            for i in instance.candidates(f):
                v = x.values.get((k, s, i), 0.0)
                grad[(k, s, i)] = p * (v + eps) ** (p - 1.0)
    return grad


def theorem2_bounds(instance: ProblemInstance) -> tuple[float, float, bool]:
    """Capacity thresholds (mu_bar, c_bar) above which the relaxation is exact.

    ``guaranteed`` is True when every declared node capacity reaches mu_bar
    and every link capacity reaches c_bar.
    """
    mu_bar = sum(f.rate for f in instance.flows)
    c_bar = sum(f.rate * (f.n_functions + 1) for f in instance.flows)
    guaranteed = all(mu >= mu_bar for mu in instance.node_caps) and all(
        l.capacity >= c_bar for l in instance.links)
    return mu_bar, c_bar, guaranteed


def default_tau(instance: ProblemInstance) -> float:
    """Overload weight dominating any achievable routing cost."""
    max_rate = max((f.rate for f in instance.flows), default=1.0)
    return 10.0 * max(instance.n_links, 1) * max_rate


# -- shared row emission ----------------------------------------------------


def _add_rate_variables(lp: LinearProgram, vix: VariableIndex,
                        instance: ProblemInstance,
                        flow_indexes: list[int]) -> None:
    for k in flow_indexes:
        flow = instance.flows[k]
        n = flow.n_functions
        for s in range(n + 1):
            for li in range(instance.n_links):
                vix.add(("r", k, s, li))
                lp.add_variable(0.0, math.inf, obj=1.0)
        # stage 0 never returns to the source; stage n never leaves the sink
        for li in instance.in_links[flow.src]:
            lp.set_bounds(vix.col(("r", k, 0, li)), 0.0, 0.0)
        for li in instance.out_links[flow.dst]:
            lp.set_bounds(vix.col(("r", k, n, li)), 0.0, 0.0)


def _conservation_row(
    lp: LinearProgram,
    vix: VariableIndex,
    instance: ProblemInstance,
    k: int,
    stage: int,
    node: int,
    x_coeff: dict[VarKey, float],
    x_const: float,
) -> None:
    """Net conservation of flow k's stage flow at a node.

    out - in - (sources) + (sinks) = 0, with placement terms either as
    variables (``x_coeff`` maps keys to +-lambda) or folded constants.
    """
    coeffs: dict[int, float] = {}
    for li in instance.out_links[node]:
        coeffs[vix.col(("r", k, stage, li))] = 1.0
    for li in instance.in_links[node]:
        j = vix.col(("r", k, stage, li))
        coeffs[j] = coeffs.get(j, 0.0) - 1.0
    for key, coef in x_coeff.items():
        if key in vix:
            coeffs[vix.col(key)] = coeffs.get(vix.col(key), 0.0) + coef
    lp.add_constraint(coeffs, "=", x_const)


def _emit_flow_rows(lp: LinearProgram, vix: VariableIndex,
                    instance: ProblemInstance, k: int,
                    placement: Placement | None) -> None:
    """Block, exclusivity, conservation, and endpoint rows for one flow.

    With ``placement`` given, placement terms become constants (repair and
    oracle programs); otherwise they reference the ``("x", k, s, i)`` columns.
    """
    flow = instance.flows[k]
    n = flow.n_functions
    lam = flow.rate

    def x_val(s: int, i: int) -> float:
        chosen = placement.assignment[(k, s)]  # type: ignore[union-attr]
        return 1.0 if chosen == i else 0.0

    if placement is None:
        for s, f in enumerate(flow.chain, start=1):
            lp.add_constraint(
                {vix.col(("x", k, s, i)): 1.0 for i in instance.candidates(f)},
                "=", 1.0)
        union = sorted({i for f in flow.chain for i in instance.candidates(f)})
        for i in union:
            coeffs = {
                vix.col(("x", k, s, i)): 1.0
                for s, f in enumerate(flow.chain, start=1)
                if i in instance.candidates(f)
            }
            lp.add_constraint(coeffs, "<", 1.0)

    def emit_stage(stage: int) -> None:
        """One conservation family for the given stage flow."""
        for i in range(instance.n_nodes):
            x_coeff: dict[VarKey, float] = {}
            const = 0.0
            # sources of the stage flow
            if stage == 0:
                if i == flow.src:
                    const += lam
            else:
                f_src = flow.chain[stage - 1]
                if i in instance.candidates(f_src):
                    if placement is None:
                        x_coeff[("x", k, stage, i)] = -lam
                    else:
                        const += lam * x_val(stage, i)
            # sinks of the stage flow
            if stage == n:
                if i == flow.dst:
                    const -= lam
            else:
                f_snk = flow.chain[stage]
                if i in instance.candidates(f_snk):
                    if placement is None:
                        x_coeff[("x", k, stage + 1, i)] = lam
                    else:
                        const -= lam * x_val(stage + 1, i)
            _conservation_row(lp, vix, instance, k, stage, i, x_coeff, const)

    if n == 0:
        emit_stage(0)
    else:
        for s in range(1, n + 1):
            emit_stage(s - 1)      # absorption-side family
        for s in range(1, n + 1):
            emit_stage(s)          # emission-side family

    # endpoint totals
    lp.add_constraint(
        {vix.col(("r", k, 0, li)): 1.0 for li in instance.out_links[flow.src]},
        "=", lam)
    lp.add_constraint(
        {vix.col(("r", k, n, li)): 1.0 for li in instance.in_links[flow.dst]},
        "=", lam)


def _node_capacity_terms(instance: ProblemInstance, vix: VariableIndex,
                         node: int) -> dict[int, float]:
    coeffs: dict[int, float] = {}
    for k, flow in enumerate(instance.flows):
        for s, f in enumerate(flow.chain, start=1):
            key = ("x", k, s, node)
            if node in instance.candidates(f) and key in vix:
                coeffs[vix.col(key)] = coeffs.get(vix.col(key), 0.0) + flow.rate
    return coeffs


# -- public builders ---------------------------------------------------------


def build_relaxation(instance: ProblemInstance,
                     with_cuts: bool = False) -> tuple[LinearProgram, VariableIndex]:
    """Relaxed joint placement-and-routing program (binary variables in [0,1]).

    With ``with_cuts`` the aggregate activity variables and the
    strengthened capacity rows are added; they are redundant for binary
    solutions but shrink the relaxed feasible set.
    """
    lp = LinearProgram()
    vix = VariableIndex()
    flow_indexes = list(range(len(instance.flows)))
    _add_rate_variables(lp, vix, instance, flow_indexes)
    for k, flow in enumerate(instance.flows):
        for s, f in enumerate(flow.chain, start=1):
            for i in instance.candidates(f):
                vix.add(("x", k, s, i))
                lp.add_variable(0.0, 1.0, obj=0.0)
    func_nodes = instance.function_nodes()
    if with_cuts:
        for f in sorted(instance.functions):
            for i in instance.functions[f]:
                vix.add(("xf", i, f))
                lp.add_variable(0.0, 1.0, obj=0.0)
        for i in func_nodes:
            vix.add(("xn", i))
            lp.add_variable(0.0, 1.0, obj=0.0)

    _emit_link_capacity_rows(lp, vix, instance, flow_indexes, None)
    for k in flow_indexes:
        _emit_flow_rows(lp, vix, instance, k, placement=None)
    for i in func_nodes:
        mu = instance.node_caps[i]
        if math.isfinite(mu):
            lp.add_constraint(_node_capacity_terms(instance, vix, i), "<", mu)

    if with_cuts:
        # x_{i,f}(k) <= x_{i,f} <= x_i box rows
        for k, flow in enumerate(instance.flows):
            for s, f in enumerate(flow.chain, start=1):
                for i in instance.candidates(f):
                    lp.add_constraint(
                        {vix.col(("x", k, s, i)): 1.0, vix.col(("xf", i, f)): -1.0},
                        "<", 0.0)
        for f in sorted(instance.functions):
            for i in instance.functions[f]:
                lp.add_constraint(
                    {vix.col(("xf", i, f)): 1.0, vix.col(("xn", i)): -1.0},
                    "<", 0.0)
        # activity-strengthened node capacity rows
        for i in func_nodes:
            mu = instance.node_caps[i]
            if not math.isfinite(mu):
                continue
            coeffs = _node_capacity_terms(instance, vix, i)
            j = vix.col(("xn", i))
            coeffs[j] = coeffs.get(j, 0.0) - mu
            lp.add_constraint(coeffs, "<", 0.0)
        for f in sorted(instance.functions):
            for i in instance.functions[f]:
                mu = instance.node_caps[i]
                if not math.isfinite(mu):
                    continue
                coeffs: dict[int, float] = {}
                for k, flow in enumerate(instance.flows):
                    for s, cf in enumerate(flow.chain, start=1):
                        if cf == f and i in instance.candidates(f):
                            j = vix.col(("x", k, s, i))
                            coeffs[j] = coeffs.get(j, 0.0) + flow.rate
                j = vix.col(("xf", i, f))
                coeffs[j] = coeffs.get(j, 0.0) - mu
                lp.add_constraint(coeffs, "<", 0.0)
    return lp, vix


def _emit_link_capacity_rows(lp: LinearProgram, vix: VariableIndex,
                             instance: ProblemInstance,
                             flow_indexes: list[int],
                             delta_col: int | None,
                             link_caps: list[float] | None = None) -> None:
    caps = link_caps if link_caps is not None else [l.capacity for l in instance.links]
    for li in range(instance.n_links):
        coeffs: dict[int, float] = {}
        for k in flow_indexes:
            n = instance.flows[k].n_functions
            for s in range(n + 1):
                coeffs[vix.col(("r", k, s, li))] = 1.0
        if delta_col is not None:
            coeffs[delta_col] = -1.0
        lp.add_constraint(coeffs, "<", caps[li])


def build_psum_subproblem(
    instance: ProblemInstance,
    x_prev: FractionalPlacement,
    params: PenaltyParams,
    with_cuts: bool = False,
) -> tuple[LinearProgram, VariableIndex]:
    """Linearized penalty step: same feasible set, objective g + sigma grad.x.

    The constant part of the linearization is dropped (it does not move
    the argmin); callers wanting the true penalized value recompute it
    via :func:`penalty_value`.
    """
    if params.eps <= 0.0:
        raise ValueError("subproblem requires eps > 0")
    lp, vix = build_relaxation(instance, with_cuts=with_cuts)
    grad = penalty_gradient(instance, x_prev, params.p, params.eps)
    lp.set_objective({vix.col(("x", k, s, i)): params.sigma * g
                      for (k, s, i), g in grad.items()})
    return lp, vix


def build_routing_repair(
    instance: ProblemInstance,
    placement: Placement,
    tau: float | None = None,
    link_caps: list[float] | None = None,
    flow_indexes: list[int] | None = None,
    with_delta: bool = True,
) -> tuple[LinearProgram, VariableIndex]:
    """Routing program with the placement fixed.

    With ``with_delta`` the link rows relax to load - delta <= capacity and
    the objective becomes g + tau*delta, which is feasible whenever every
    consecutive placed pair is connected; without it the exact capacitated
    program is built (used by the oracle and the certification step).
    Raises :class:`StructuralInfeasibleError` on a disconnected stage pair.
    """
    flow_indexes = list(range(len(instance.flows))) if flow_indexes is None else flow_indexes
    reach = reachability(instance)
    for k in flow_indexes:
        flow = instance.flows[k]
        seq = [flow.src]
        for s in range(1, flow.n_functions + 1):
            seq.append(placement.assignment[(k, s)])
        seq.append(flow.dst)
        for a, b in zip(seq, seq[1:]):
            if a != b and not reach[a][b]:
                raise StructuralInfeasibleError(
                    flow.id, (instance.node_ids[a], instance.node_ids[b]))

    lp = LinearProgram()
    vix = VariableIndex()
    _add_rate_variables(lp, vix, instance, flow_indexes)
    delta_col = None
    if with_delta:
        delta_col = vix.add(("delta",))
        lp.add_variable(0.0, math.inf,
                        obj=tau if tau is not None else default_tau(instance))
    _emit_link_capacity_rows(lp, vix, instance, flow_indexes, delta_col, link_caps)
    for k in flow_indexes:
        _emit_flow_rows(lp, vix, instance, k, placement=placement)
    return lp, vix


# -- result extraction -------------------------------------------------------


def extract_placement(instance: ProblemInstance, vix: VariableIndex,
                      x) -> FractionalPlacement:
    values: dict[tuple[int, int, int], float] = {}
    func_agg: dict[tuple[int, str], float] = {}
    node_agg: dict[int, float] = {}
    for key, col in vix.index.items():
        if key[0] == "x":
            _, k, s, i = key
            values[(k, s, i)] = min(1.0, max(0.0, float(x[col])))
        elif key[0] == "xf":
            func_agg[(key[1], key[2])] = float(x[col])
        elif key[0] == "xn":
            node_agg[key[1]] = float(x[col])
    return FractionalPlacement(
        values,
        func_aggregates=func_agg or None,
        node_aggregates=node_agg or None,
    )


def extract_routing(instance: ProblemInstance, vix: VariableIndex, x,
                    drop_tol: float = 1e-11) -> RoutingPlan:
    rates: dict[tuple[int, int, int], float] = {}
    for key, col in vix.index.items():
        if key[0] == "r":
            v = float(x[col])
            if v > drop_tol:
                rates[(key[1], key[2], key[3])] = v
    return RoutingPlan(rates)


def routing_cost(vix: VariableIndex, x) -> float:
    """Plain total-rate part of an objective vector (flow columns only)."""
    total = 0.0
    for key, col in vix.index.items():
        if key[0] == "r":
            total += float(x[col])
    return total
