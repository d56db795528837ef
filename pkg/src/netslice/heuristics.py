"""Four decoupled instantiate-then-route heuristics.

I   sequential: place and route one flow at a time on residual capacities;
II  batch: place all flows first, then one joint overload-minimizing route;
III bootstrapped variable fixing on the relaxation, greedy zeroing of the
    undecided variables, rounding, final repair routing;
IV  stage-by-stage greedy placement with successive-shortest-path
    min-cost routing on residual capacities and a local-search pass.

Placement scoring for I and II weighs endpoint hop distances against the
inverse remaining node capacity.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

from .formulation import (
    StructuralInfeasibleError,
    build_relaxation,
    build_routing_repair,
    default_tau,
    extract_placement,
    extract_routing,
)
from .graph import hops_from, hops_to
from .lp import LpStatus, solve_lp
from .model import (
    Placement,
    ProblemInstance,
    RoutingPlan,
    Solution,
    SolutionStatus,
)
from .psum import repair_routing, round_placement
from .verify import check_feasibility


class PlacementError(RuntimeError):
    """No candidate node is available for a required function."""


@dataclass(frozen=True)
class WeightingConfig:
    """Weights of the two node-cost kinds: endpoint hops and 1/capacity.

    ``w2=None`` resolves to 10x the largest declared node capacity.
    """

    w1: float = 1.0
    w2: float | None = None

    def __post_init__(self) -> None:
        if self.w1 < 0.0 or (self.w2 is not None and self.w2 < 0.0):
            raise ValueError("weights must be nonnegative")
        if self.w1 == 0.0 and self.w2 == 0.0:
            raise ValueError("at least one weight must be positive")

    def resolve_w2(self, instance: ProblemInstance) -> float:
        if self.w2 is not None:
            return self.w2
        finite = [mu for mu in instance.node_caps if math.isfinite(mu)]
        return 10.0 * max(finite) if finite else 10.0


@dataclass(frozen=True)
class HeuristicIIIConfig:
    t_max: int = 3
    theta1: float = 0.1
    theta2: float = 0.9
    theta: float = 0.9          # final rounding threshold
    tau: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.theta1 < self.theta2 < 1.0:
            raise ValueError("need 0 < theta1 < theta2 < 1")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")


def hop_counts(instance: ProblemInstance, target: int) -> list[float]:
    """Directed BFS hop distances of every node to ``target`` (inf if unreachable)."""
    return hops_to(instance, target)


def filter_and_weight(
    instance: ProblemInstance,
    flow_idx: int,
    function_id: str,
    remaining: list[float],
    cfg: WeightingConfig,
    hops_src: list[float] | None = None,
    hops_dst: list[float] | None = None,
    exclude: frozenset[int] | set[int] = frozenset(),
) -> int:
    """Pick the cheapest eligible host for one function of one flow.

    Candidates with remaining capacity below the flow rate are filtered
    out; if none survive, the full candidate set is used and the capacity
    violation is accepted.  Cost: w1*(hops to src + hops to dst) +
    w2/remaining, unreachable hops counted as n_nodes + 1, ties to the
    smallest node index.
    """
    flow = instance.flows[flow_idx]
    candidates = [i for i in instance.candidates(function_id) if i not in exclude]
    if not candidates:
        raise PlacementError(
            f"no remaining candidate for {function_id!r} of flow {flow.id!r}")
    eligible = [i for i in candidates if remaining[i] >= flow.rate]
    pool = eligible or candidates
    hs = hops_src if hops_src is not None else hops_from(instance, flow.src)
    hd = hops_dst if hops_dst is not None else hops_to(instance, flow.dst)
    sentinel = float(instance.n_nodes + 1)
    w2 = cfg.resolve_w2(instance)

    def cost(i: int) -> float:
        h1 = hs[i] if math.isfinite(hs[i]) else sentinel
        h2 = hd[i] if math.isfinite(hd[i]) else sentinel
        mu = remaining[i]
        if math.isinf(mu):
            cap_term = 0.0
        else:
            cap_term = w2 / max(mu, 1e-12)
        return cfg.w1 * (h1 + h2) + cap_term

    return min(pool, key=lambda i: (cost(i), i))


def _instantiate_all(instance: ProblemInstance, cfg: WeightingConfig
                     ) -> tuple[dict[tuple[int, int], int], list[str]]:
    """Filter-and-weight sweep over flows in ascending id order."""
    remaining = list(instance.node_caps)
    assignment: dict[tuple[int, int], int] = {}
    failed: list[str] = []
    for k, flow in enumerate(instance.flows):
        hs = hops_from(instance, flow.src)
        hd = hops_to(instance, flow.dst)
        used: set[int] = set()
        try:
            for s, f in enumerate(flow.chain, start=1):
                chosen = filter_and_weight(
                    instance, k, f, remaining, cfg, hs, hd, exclude=used)
                assignment[(k, s)] = chosen
                remaining[chosen] -= flow.rate
                used.add(chosen)
        except PlacementError:
            for s in range(1, flow.n_functions + 1):
                assignment.pop((k, s), None)
            failed.append(flow.id)
    return assignment, failed


def _assemble(instance, assignment, rates, failed, delta, t0) -> Solution:
    placement = Placement(dict(assignment))
    routing = RoutingPlan(dict(rates))
    probe = Solution(
        status=SolutionStatus.BINARY_WITH_VIOLATIONS,
        placement=placement, routing=routing,
        objective=routing.total_rate(),
        delta=delta, failed_flows=tuple(failed))
    report = check_feasibility(instance, probe)
    status = (SolutionStatus.BINARY_FEASIBLE
              if report.clean() and not failed
              else SolutionStatus.BINARY_WITH_VIOLATIONS)
    return Solution(
        status=status, placement=placement, routing=routing,
        objective=probe.objective, delta=delta, failed_flows=tuple(failed),
        wall_time_ms=(time.perf_counter() - t0) * 1e3)


def heuristic1(instance: ProblemInstance, cfg: WeightingConfig | None = None,
               tau: float | None = None, backend: str = "bundled") -> Solution:
    """Online-style: place and route flows one at a time.

    Each flow solves its own overload-minimizing routing program against
    the residual link capacities, which are then reduced by its rates
    (floored at zero).
    """
    t0 = time.perf_counter()
    cfg = cfg or WeightingConfig()
    tau = default_tau(instance) if tau is None else tau
    remaining = list(instance.node_caps)
    caps = [l.capacity for l in instance.links]
    assignment: dict[tuple[int, int], int] = {}
    rates: dict[tuple[int, int, int], float] = {}
    failed: list[str] = []
    worst_delta = 0.0
    for k, flow in enumerate(instance.flows):
        hs = hops_from(instance, flow.src)
        hd = hops_to(instance, flow.dst)
        used: set[int] = set()
        flow_assign: dict[tuple[int, int], int] = {}
        try:
            for s, f in enumerate(flow.chain, start=1):
                chosen = filter_and_weight(
                    instance, k, f, remaining, cfg, hs, hd, exclude=used)
                flow_assign[(k, s)] = chosen
                remaining[chosen] -= flow.rate
                used.add(chosen)
        except PlacementError:
            failed.append(flow.id)
            continue
        try:
            lp, vix = build_routing_repair(
                instance, Placement(flow_assign), tau=tau,
                link_caps=caps, flow_indexes=[k])
        except StructuralInfeasibleError:
            failed.append(flow.id)
            continue
        res = solve_lp(lp, backend=backend)
        if res.status != LpStatus.OPTIMAL:
            failed.append(flow.id)
            continue
        assignment.update(flow_assign)
        worst_delta = max(worst_delta, float(res.x[vix.col(("delta",))]))
        routing_k = extract_routing(instance, vix, res.x)
        for (kk, s, li), r in routing_k.virtual_rates.items():
            rates[(kk, s, li)] = rates.get((kk, s, li), 0.0) + r
        for li, load in enumerate(routing_k.link_loads(instance.n_links)):
            if load > 0.0:
                caps[li] = max(0.0, caps[li] - load)
    delta = worst_delta if worst_delta > 1e-11 else 0.0
    return _assemble(instance, assignment, rates, failed, delta, t0)


def heuristic2(instance: ProblemInstance, cfg: WeightingConfig | None = None,
               tau: float | None = None, backend: str = "bundled") -> Solution:
    """Place every flow first, then route all of them in one joint program."""
    t0 = time.perf_counter()
    cfg = cfg or WeightingConfig()
    assignment, failed = _instantiate_all(instance, cfg)
    sol = repair_routing(instance, Placement(assignment), tau=tau, backend=backend)
    all_failed = tuple(failed) + sol.failed_flows
    status = sol.status
    if all_failed:
        status = SolutionStatus.BINARY_WITH_VIOLATIONS
    return Solution(
        status=status, placement=sol.placement, routing=sol.routing,
        objective=sol.objective, delta=sol.delta, failed_flows=all_failed,
        wall_time_ms=(time.perf_counter() - t0) * 1e3)


def heuristic3(instance: ProblemInstance, cfg: HeuristicIIIConfig | None = None,
               backend: str = "bundled") -> Solution:
    """Bootstrapped fixing, greedy zeroing, rounding, final repair routing."""
    t0 = time.perf_counter()
    cfg = cfg or HeuristicIIIConfig()
    lp, vix = build_relaxation(instance, with_cuts=False)
    placement_keys = sorted(
        key[1:] for key in vix.index if key[0] == "x")  # (k, s, i)
    ones: set[tuple[int, int, int]] = set()
    zeros: set[tuple[int, int, int]] = set()

    def fixes(extra_zero=None):
        overrides = {vix.col(("x",) + key): (1.0, 1.0) for key in ones}
        for key in zeros:
            overrides[vix.col(("x",) + key)] = (0.0, 0.0)
        if extra_zero is not None:
            overrides[vix.col(("x",) + extra_zero)] = (0.0, 0.0)
        return overrides

    def solve_with(overrides):
        return solve_lp(lp.with_bounds(overrides), backend=backend)

    x_star = None
    for _round in range(cfg.t_max):
        res = solve_with({vix.col(("x",) + key): (1.0, 1.0) for key in ones})
        if res.status == LpStatus.INFEASIBLE and ones:
            ones.clear()
            res = solve_with({})
        if res.status == LpStatus.INFEASIBLE:
            return Solution(SolutionStatus.INFEASIBLE, None, None, math.nan,
                            wall_time_ms=(time.perf_counter() - t0) * 1e3)
        if res.status != LpStatus.OPTIMAL:
            raise RuntimeError(f"bootstrap LP ended with status {res.status}")
        x_star = extract_placement(instance, vix, res.x)
        new_ones = {key for key in placement_keys
                    if x_star.values[key] >= cfg.theta2}
        new_zeros = {key for key in placement_keys
                     if x_star.values[key] <= cfg.theta1}
        # audit promotions against node capacities; a violated node sheds
        # all of its promoted triples
        load: dict[int, float] = {}
        for (k, s, i) in new_ones:
            load[i] = load.get(i, 0.0) + instance.flows[k].rate
        bad_nodes = {i for i, v in load.items()
                     if v > instance.node_caps[i] + 1e-9}
        new_ones = {key for key in new_ones if key[2] not in bad_nodes}
        ones, zeros = new_ones, new_zeros
        # keep every block satisfiable: release the best member of a block
        # whose candidates were all sent to zero
        for k, flow in enumerate(instance.flows):
            for s, f in enumerate(flow.chain, start=1):
                block = [(k, s, i) for i in instance.candidates(f)]
                if all(key in zeros for key in block):
                    best = max(block, key=lambda key: (x_star.values[key], -key[2]))
                    zeros.discard(best)

    undecided = [key for key in placement_keys
                 if key not in ones and key not in zeros]
    budget = len(undecided)
    for _round in range(budget):
        if not undecided:
            break
        base_obj = None
        best_key, best_obj = None, math.inf
        newly_one = []
        for key in undecided:
            res = solve_with(fixes(extra_zero=key))
            if res.status == LpStatus.INFEASIBLE:
                newly_one.append(key)
            elif res.status == LpStatus.OPTIMAL and res.objective < best_obj:
                best_key, best_obj = key, res.objective
        for key in newly_one:
            ones.add(key)
            undecided.remove(key)
        if best_key is None:
            continue
        zeros.add(best_key)
        undecided.remove(best_key)

    res = solve_with(fixes())
    if res.status != LpStatus.OPTIMAL:
        return Solution(SolutionStatus.INFEASIBLE, None, None, math.nan,
                        wall_time_ms=(time.perf_counter() - t0) * 1e3)
    x_final = extract_placement(instance, vix, res.x)
    placement = round_placement(instance, x_final, cfg.theta)
    sol = repair_routing(instance, placement, tau=cfg.tau, backend=backend)
    return Solution(
        status=sol.status, placement=sol.placement, routing=sol.routing,
        objective=sol.objective, delta=sol.delta, failed_flows=sol.failed_flows,
        wall_time_ms=(time.perf_counter() - t0) * 1e3)


# -- heuristic IV -------------------------------------------------------------


def min_cost_route(instance: ProblemInstance, caps: list[float],
                   src: int, dst: int, amount: float
                   ) -> dict[int, float] | None:
    """Successive shortest paths with potentials; unit cost per link per unit.

    ``caps`` are residual capacities indexed like instance.links.  Returns
    net per-link flow or None when the residual network cannot carry the
    full amount.
    """
    if src == dst or amount <= 0.0:
        return {}
    n = instance.n_nodes
    flow: dict[int, float] = {}
    potential = [0.0] * n
    remaining = amount
    while remaining > 1e-12:
        dist = [math.inf] * n
        prev: list[tuple[int, int, bool] | None] = [None] * n  # (node, link, forward)
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u] + 1e-15:
                continue
            for li in instance.out_links[u]:
                if caps[li] - flow.get(li, 0.0) <= 1e-12:
                    continue
                v = instance.links[li].head
                nd = d + 1.0 + potential[u] - potential[v]
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    prev[v] = (u, li, True)
                    heapq.heappush(heap, (nd, v))
            for li in instance.in_links[u]:
                if flow.get(li, 0.0) <= 1e-12:
                    continue
                v = instance.links[li].tail
                nd = d - 1.0 + potential[u] - potential[v]
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    prev[v] = (u, li, False)
                    heapq.heappush(heap, (nd, v))
        if math.isinf(dist[dst]):
            return None
        for v in range(n):
            if math.isfinite(dist[v]):
                potential[v] += dist[v]
        bottleneck = remaining
        v = dst
        while v != src:
            u, li, forward = prev[v]
            avail = (caps[li] - flow.get(li, 0.0)) if forward else flow.get(li, 0.0)
            bottleneck = min(bottleneck, avail)
            v = u
        v = dst
        while v != src:
            u, li, forward = prev[v]
            flow[li] = flow.get(li, 0.0) + (bottleneck if forward else -bottleneck)
            v = u
        remaining -= bottleneck
    return {li: f for li, f in flow.items() if f > 1e-12}


def heuristic4(instance: ProblemInstance, backend: str = "bundled") -> Solution:
    """Stage-wise greedy placement with min-cost routing and local search.

    Keeps feasibility by construction: a flow whose stage cannot be
    routed within residual capacities is rolled back and marked failed
    rather than overloading links.
    """
    t0 = time.perf_counter()
    caps = [l.capacity for l in instance.links]
    remaining = list(instance.node_caps)
    assignment: dict[tuple[int, int], int] = {}
    rates: dict[tuple[int, int, int], float] = {}
    failed: list[str] = []

    for k, flow in enumerate(instance.flows):
        n = flow.n_functions
        lam = flow.rate
        seq = [flow.src]
        segments: list[dict[int, float]] = []
        used: set[int] = set()
        ok = True
        for s in range(n):
            f = flow.chain[s]
            hops = hops_from(instance, seq[-1])
            pool = [i for i in instance.candidates(f) if i not in used]
            if not pool:
                ok = False
                break
            eligible = [i for i in pool if remaining[i] >= lam]
            chosen_pool = eligible or pool
            sentinel = float(instance.n_nodes + 1)
            chosen = min(
                chosen_pool,
                key=lambda i: (hops[i] if math.isfinite(hops[i]) else sentinel,
                               -remaining[i], i))
            route = min_cost_route(instance, caps, seq[-1], chosen, lam)
            if route is None:
                ok = False
                break
            for li, r in route.items():
                caps[li] -= r
            segments.append(route)
            seq.append(chosen)
            used.add(chosen)
            remaining[chosen] -= lam
        if ok:
            route = min_cost_route(instance, caps, seq[-1], flow.dst, lam)
            if route is None:
                ok = False
            else:
                for li, r in route.items():
                    caps[li] -= r
                segments.append(route)
                seq.append(flow.dst)
        if not ok:
            for s, route in enumerate(segments):
                for li, r in route.items():
                    caps[li] += r
            for s, node in enumerate(seq[1:], start=1):
                remaining[node] += lam
            failed.append(flow.id)
            continue

        seq, segments = _local_search(
            instance, caps, remaining, flow, seq, segments, lam)
        for s in range(1, n + 1):
            assignment[(k, s)] = seq[s]
        for s, route in enumerate(segments):
            for li, r in route.items():
                rates[(k, s, li)] = rates.get((k, s, li), 0.0) + r

    return _assemble(instance, assignment, rates, failed,
                     delta=None, t0=t0)


def _local_search(instance, caps, remaining, flow, seq, segments, lam):
    """One pass over stages, swapping a host when rerouting its two adjacent
    segments strictly lowers their cost."""
    n = flow.n_functions
    for s in range(1, n + 1):
        cur = seq[s]
        others = {seq[j] for j in range(1, n + 1) if j != s}
        before, after = segments[s - 1], segments[s]
        cur_cost = sum(before.values()) + sum(after.values())
        # return the two segments' flow and the host capacity to the pool
        for li, r in before.items():
            caps[li] += r
        for li, r in after.items():
            caps[li] += r
        remaining[cur] += lam
        best = (cur_cost - 1e-9, cur, before, after)
        for alt in instance.candidates(flow.chain[s - 1]):
            if alt == cur or alt in others or remaining[alt] < lam:
                continue
            r1 = min_cost_route(instance, caps, seq[s - 1], alt, lam)
            if r1 is None:
                continue
            for li, r in r1.items():
                caps[li] -= r
            r2 = min_cost_route(instance, caps, alt, seq[s + 1], lam)
            for li, r in r1.items():
                caps[li] += r
            if r2 is None:
                continue
            cost = sum(r1.values()) + sum(r2.values())
            if cost < best[0]:
                best = (cost, alt, r1, r2)
        _cost, host, r1, r2 = best
        seq[s] = host
        segments[s - 1], segments[s] = r1, r2
        remaining[host] -= lam
        for li, r in r1.items():
            caps[li] -= r
        for li, r in r2.items():
            caps[li] -= r
    return seq, segments
