"""Feasibility auditing and the exhaustive placement oracle.

``check_feasibility`` recomputes every constraint residual from raw data
and never trusts solver output.  ``brute_force_optimum`` enumerates all
exclusivity-respecting placements, certifies each with an exact routing
program, and returns the true optimum (or certified infeasibility).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .formulation import StructuralInfeasibleError, build_routing_repair
from .graph import reachability
from .lp import LpStatus, solve_lp
from .model import (
    FractionalPlacement,
    Placement,
    ProblemInstance,
    Solution,
    SolutionStatus,
)


class OracleBudgetError(RuntimeError):
    """The placement search space exceeds the caller's budget."""


@dataclass(frozen=True)
class ViolationReport:
    link_over: tuple[float, ...]        # per-link overload, >= 0
    node_over: tuple[float, ...]        # per-node overload, >= 0
    max_link_ratio: float               # worst overload / capacity over C > 0
    max_node_ratio: float
    zero_capacity_links: tuple[int, ...]   # overloaded links with C == 0
    zero_capacity_nodes: tuple[int, ...]
    conservation_residual: float
    delta: float | None = None          # repair-program overload, when present

    def clean(self, tol: float = 1e-6) -> bool:
        return (
            max(self.link_over, default=0.0) <= tol
            and max(self.node_over, default=0.0) <= tol
            and not self.zero_capacity_links
            and not self.zero_capacity_nodes
            and self.conservation_residual <= tol
        )

    def as_dict(self) -> dict:
        return {
            "max_link_over": max(self.link_over, default=0.0),
            "max_node_over": max(self.node_over, default=0.0),
            "max_link_ratio": self.max_link_ratio,
            "max_node_ratio": self.max_node_ratio,
            "zero_capacity_links": len(self.zero_capacity_links),
            "zero_capacity_nodes": len(self.zero_capacity_nodes),
            "conservation_residual": self.conservation_residual,
            "delta": self.delta,
        }


def _placement_values(instance: ProblemInstance,
                      placement) -> dict[tuple[int, int, int], float]:
    if placement is None:
        return {}
    if isinstance(placement, Placement):
        return placement.to_fractional(instance).values
    return placement.values


def check_feasibility(instance: ProblemInstance, solution: Solution,
                      tol: float = 1e-6) -> ViolationReport:
    """Recompute capacity overloads and conservation residuals from raw data."""
    x = _placement_values(instance, solution.placement)
    rates = solution.routing.virtual_rates if solution.routing else {}

    link_loads = [0.0] * instance.n_links
    for (k, s, li), r in rates.items():
        if not 0 <= li < instance.n_links or not 0 <= k < len(instance.flows):
            raise ValueError(f"routing entry out of range: {(k, s, li)}")
        link_loads[li] += r
    link_over = []
    zero_links = []
    max_link_ratio = 0.0
    for li, load in enumerate(link_loads):
        cap = instance.links[li].capacity
        over = max(0.0, load - cap)
        link_over.append(over)
        if over > tol:
            if cap > 0.0:
                max_link_ratio = max(max_link_ratio, over / cap)
            else:
                zero_links.append(li)

    node_loads = [0.0] * instance.n_nodes
    for (k, s, i), v in x.items():
        if not 0 <= i < instance.n_nodes or not 0 <= k < len(instance.flows):
            raise ValueError(f"placement entry out of range: {(k, s, i)}")
        node_loads[i] += instance.flows[k].rate * v
    node_over = []
    zero_nodes = []
    max_node_ratio = 0.0
    for i, load in enumerate(node_loads):
        mu = instance.node_caps[i]
        over = 0.0 if math.isinf(mu) else max(0.0, load - mu)
        node_over.append(over)
        if over > tol:
            if mu > 0.0:
                max_node_ratio = max(max_node_ratio, over / mu)
            else:
                zero_nodes.append(i)

    residual = _conservation_residual(instance, x, rates, solution)
    return ViolationReport(
        link_over=tuple(link_over),
        node_over=tuple(node_over),
        max_link_ratio=max_link_ratio,
        max_node_ratio=max_node_ratio,
        zero_capacity_links=tuple(zero_links),
        zero_capacity_nodes=tuple(zero_nodes),
        conservation_residual=residual,
        delta=solution.delta,
    )


def _conservation_residual(instance, x, rates, solution) -> float:
    """Worst absolute residual of the stage conservation and endpoint rows."""
    failed = set(solution.failed_flows)
    worst = 0.0
    for k, flow in enumerate(instance.flows):
        if flow.id in failed:
            continue
        n = flow.n_functions
        lam = flow.rate
        net = {}
        for (kk, s, li), r in rates.items():
            if kk != k:
                continue
            link = instance.links[li]
            net[(s, link.tail)] = net.get((s, link.tail), 0.0) + r
            net[(s, link.head)] = net.get((s, link.head), 0.0) - r
        for s in range(n + 1):
            for i in range(instance.n_nodes):
                out_minus_in = net.get((s, i), 0.0)
                expect = 0.0
                if s == 0 and i == flow.src:
                    expect += lam
                if s >= 1:
                    expect += lam * x.get((k, s, i), 0.0)
                if s == n and i == flow.dst:
                    expect -= lam
                if s <= n - 1:
                    expect -= lam * x.get((k, s + 1, i), 0.0)
                worst = max(worst, abs(out_minus_in - expect))
        # block sums and per-node exclusivity
        for s in range(1, n + 1):
            members = instance.candidates(flow.chain[s - 1])
            total = sum(x.get((k, s, i), 0.0) for i in members)
            worst = max(worst, abs(total - 1.0))
        per_node: dict[int, float] = {}
        for s in range(1, n + 1):
            for i in instance.candidates(flow.chain[s - 1]):
                per_node[i] = per_node.get(i, 0.0) + x.get((k, s, i), 0.0)
        for i, tot in per_node.items():
            worst = max(worst, max(0.0, tot - 1.0))
    return worst


# -- exhaustive oracle --------------------------------------------------------


@dataclass
class _SearchState:
    instance: ProblemInstance
    reach: list[list[bool]]
    node_load: list[float]
    best_obj: float = math.inf
    best: dict[tuple[int, int], int] = field(default_factory=dict)
    feasible_found: bool = False
    lp_solves: int = 0


def _flow_options(instance: ProblemInstance, reach, k: int) -> list[tuple[int, ...]]:
    """Exclusivity-respecting, path-connected placements of one flow."""
    flow = instance.flows[k]
    options: list[tuple[int, ...]] = []

    def rec(s: int, prefix: tuple[int, ...]) -> None:
        if s > flow.n_functions:
            last = prefix[-1] if prefix else flow.src
            if last == flow.dst or reach[last][flow.dst]:
                options.append(prefix)
            return
        prev = prefix[-1] if prefix else flow.src
        for i in instance.candidates(flow.chain[s - 1]):
            if i in prefix:
                continue
            if prev != i and not reach[prev][i]:
                continue
            rec(s + 1, prefix + (i,))

    rec(1, ())
    return options


def brute_force_optimum(
    instance: ProblemInstance,
    max_placements: int = 20000,
    backend: str = "bundled",
) -> tuple[float | None, Placement | None]:
    """Exact optimum over all binary placements, or (None, None) if infeasible.

    Every surviving placement is certified by the exact fixed-placement
    routing program (no overload variable); node-capacity and
    connectivity pruning only discards provably infeasible placements.
    """
    space = 1
    for flow in instance.flows:
        for f in flow.chain:
            space *= len(instance.candidates(f))
            if space > max_placements:
                raise OracleBudgetError(
                    f"placement space exceeds budget ({max_placements})")
    reach = reachability(instance)
    state = _SearchState(instance, reach, [0.0] * instance.n_nodes)
    per_flow = [_flow_options(instance, reach, k) for k in range(len(instance.flows))]
    if any(not opts for opts in per_flow):
        return None, None

    assignment: dict[tuple[int, int], int] = {}

    def rec(k: int) -> None:
        if k == len(instance.flows):
            _certify_leaf(state, assignment)
            return
        flow = instance.flows[k]
        for option in per_flow[k]:
            ok = True
            for i in option:
                state.node_load[i] += flow.rate
            for i in set(option):
                if state.node_load[i] > instance.node_caps[i] + 1e-9:
                    ok = False
            if ok:
                for s, i in enumerate(option, start=1):
                    assignment[(k, s)] = i
                rec(k + 1)
                for s in range(1, len(option) + 1):
                    del assignment[(k, s)]
            for i in option:
                state.node_load[i] -= flow.rate
        return

    def _certify_leaf(state: _SearchState, assignment) -> None:
        placement = Placement(dict(assignment))
        try:
            lp, vix = build_routing_repair(
                instance, placement, with_delta=False)
        except StructuralInfeasibleError:
            return
        state.lp_solves += 1
        res = solve_lp(lp, backend=backend)
        if res.status != LpStatus.OPTIMAL:
            return
        state.feasible_found = True
        if res.objective < state.best_obj - 1e-12:
            state.best_obj = res.objective
            state.best = dict(assignment)

    rec(0)
    if not state.feasible_found:
        return None, None
    return state.best_obj, Placement(state.best)


def brute_force_feasible(instance: ProblemInstance,
                         max_placements: int = 20000,
                         backend: str = "bundled") -> bool:
    """Certified feasibility: stops at the first placement whose exact
    routing program solves."""
    space = 1
    for flow in instance.flows:
        for f in flow.chain:
            space *= len(instance.candidates(f))
            if space > max_placements:
                raise OracleBudgetError(
                    f"placement space exceeds budget ({max_placements})")
    reach = reachability(instance)
    per_flow = [_flow_options(instance, reach, k) for k in range(len(instance.flows))]
    if any(not opts for opts in per_flow):
        return False
    node_load = [0.0] * instance.n_nodes
    assignment: dict[tuple[int, int], int] = {}

    def rec(k: int) -> bool:
        if k == len(instance.flows):
            placement = Placement(dict(assignment))
            try:
                lp, _ = build_routing_repair(instance, placement, with_delta=False)
            except StructuralInfeasibleError:
                return False
            return solve_lp(lp, backend=backend).status == LpStatus.OPTIMAL
        flow = instance.flows[k]
        for option in per_flow[k]:
            ok = True
            for i in option:
                node_load[i] += flow.rate
            for i in set(option):
                if node_load[i] > instance.node_caps[i] + 1e-9:
                    ok = False
            if ok:
                for s, i in enumerate(option, start=1):
                    assignment[(k, s)] = i
                found = rec(k + 1)
                for s in range(1, len(option) + 1):
                    del assignment[(k, s)]
                if found:
                    for i in option:
                        node_load[i] -= flow.rate
                    return True
            for i in option:
                node_load[i] -= flow.rate
        return False

    return rec(0)
