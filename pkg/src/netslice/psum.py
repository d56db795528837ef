"""Penalty continuation solvers.

``psum_solve`` alternates linearized concave-penalty steps with a growing
penalty weight until the relaxed placement turns binary, then certifies
the placement with an exact routing program.  ``psum_r_solve`` truncates
the continuation and finishes with threshold/capacity-aware rounding plus
a repair program that minimizes the worst link overload.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .formulation import (
    PenaltyParams,
    StructuralInfeasibleError,
    VariableIndex,
    build_relaxation,
    build_routing_repair,
    default_tau,
    extract_placement,
    extract_routing,
    penalty_gradient,
    penalty_value,
    routing_cost,
)
from .lp import LpStatus, solve_lp
from .model import (
    FractionalPlacement,
    Placement,
    ProblemInstance,
    Solution,
    SolutionStatus,
    binary_placement_from_fractional,
)
from .verify import check_feasibility


@dataclass(frozen=True)
class PsumConfig:
    sigma1: float = 2.0
    gamma: float = 1.1
    eps1: float = 1e-3
    eta: float = 0.7
    p: float = 0.5
    t_max: int = 20
    binarity_tol: float = 1e-4
    use_cuts: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.eta < 1.0 < self.gamma:
            raise ValueError("need 0 < eta < 1 < gamma")
        if self.sigma1 <= 0.0 or self.eps1 <= 0.0:
            raise ValueError("sigma1 and eps1 must be positive")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")


@dataclass(frozen=True)
class PsumRConfig:
    t_max: int = 7
    theta: float = 0.9
    tau: float | None = None

    def __post_init__(self) -> None:
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.tau is not None and self.tau <= 0.0:
            raise ValueError("tau must be positive")


@dataclass
class PsumStageRecord:
    stage: int
    sigma: float
    eps: float
    g: float
    penalty: float
    penalized: float
    binarity_gap: float
    lp_iterations: int
    wall_ms: float
    # penalized value of the previous iterate under this stage's parameters;
    # the stage solution must not exceed it (first-order upper-bound step)
    ref_penalized: float = math.nan


@dataclass
class PsumTrace:
    stages: list[PsumStageRecord] = field(default_factory=list)
    rounded: bool = False

    CSV_HEADER = "stage,sigma,epsilon,g,P,penalized,binarity_gap,lp_iters,ms"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.stages:
            lines.append(
                f"{r.stage},{r.sigma:.12g},{r.eps:.12g},{r.g:.12g},"
                f"{r.penalty:.12g},{r.penalized:.12g},{r.binarity_gap:.12g},"
                f"{r.lp_iterations},{r.wall_ms:.3f}")
        return "\n".join(lines) + "\n"


def round_placement(
    instance: ProblemInstance,
    x: FractionalPlacement,
    theta: float,
    remaining: list[float] | None = None,
) -> Placement:
    """Threshold-then-capacity rounding of a block-stochastic placement.

    Blocks are processed in ascending (flow, position) order.  A block
    that is already binary keeps its assignment; otherwise the maximum
    entry wins when it reaches ``theta``, else the candidate with the
    largest remaining capacity (ties to the smallest node index).  The
    chosen node's remaining capacity drops by the flow rate either way
    and may go negative, which later shows up as a reported violation.
    """
    remaining = list(instance.node_caps) if remaining is None else list(remaining)
    assignment: dict[tuple[int, int], int] = {}
    for k, flow in enumerate(instance.flows):
        for s in range(1, flow.n_functions + 1):
            block = x.block(instance, k, s)
            best_i, best_v = max(block, key=lambda iv: (iv[1], -iv[0]))
            if best_v >= theta or best_v >= 1.0 - 1e-9:
                chosen = best_i
            else:
                chosen = min((i for i, _v in block),
                             key=lambda i: (-remaining[i], i))
            assignment[(k, s)] = chosen
            remaining[chosen] -= flow.rate
    return Placement(assignment)


def _certify_binary(instance, placement, backend) -> tuple[Solution | None, int]:
    """Exact fixed-placement routing (no overload variable)."""
    try:
        lp, vix = build_routing_repair(instance, placement, with_delta=False)
    except StructuralInfeasibleError:
        return None, 0
    res = solve_lp(lp, backend=backend)
    if res.status != LpStatus.OPTIMAL:
        return None, res.iterations
    routing = extract_routing(instance, vix, res.x)
    return Solution(
        status=SolutionStatus.BINARY_FEASIBLE,
        placement=placement,
        routing=routing,
        objective=routing.total_rate(),
    ), res.iterations


def repair_routing(
    instance: ProblemInstance,
    placement: Placement,
    tau: float | None = None,
    backend: str = "bundled",
) -> Solution:
    """Fixed-placement routing minimizing g + tau * (worst link overload).

    Flows whose consecutive placed nodes are disconnected are excluded
    from the program and reported in ``failed_flows``; the status comes
    from the measured violations.
    """
    tau = default_tau(instance) if tau is None else tau
    all_flows = list(range(len(instance.flows)))
    failed: list[str] = []
    flow_indexes = all_flows
    try:
        lp, vix = build_routing_repair(instance, placement, tau=tau)
    except StructuralInfeasibleError:
        flow_indexes = []
        for k in all_flows:
            try:
                build_routing_repair(instance, placement, tau=tau, flow_indexes=[k])
                flow_indexes.append(k)
            except StructuralInfeasibleError:
                failed.append(instance.flows[k].id)
        lp, vix = build_routing_repair(instance, placement, tau=tau,
                                       flow_indexes=flow_indexes)
    res = solve_lp(lp, backend=backend)
    if res.status != LpStatus.OPTIMAL:
        raise RuntimeError(f"repair LP ended with status {res.status}")
    routing = extract_routing(instance, vix, res.x)
    delta = float(res.x[vix.col(("delta",))])
    probe = Solution(
        status=SolutionStatus.BINARY_WITH_VIOLATIONS,
        placement=placement,
        routing=routing,
        objective=routing.total_rate(),
        delta=delta if delta > 1e-11 else 0.0,
        failed_flows=tuple(failed),
    )
    report = check_feasibility(instance, probe)
    status = (SolutionStatus.BINARY_FEASIBLE
              if report.clean() and not failed
              else SolutionStatus.BINARY_WITH_VIOLATIONS)
    return Solution(
        status=status,
        placement=placement,
        routing=routing,
        objective=probe.objective,
        delta=probe.delta,
        failed_flows=tuple(failed),
    )


def _engine(instance, cfg, stage_limit, theta, tau, backend):
    start = time.perf_counter()
    trace = PsumTrace()
    base_lp, vix = build_relaxation(instance, with_cuts=cfg.use_cuts)
    stage_start = time.perf_counter()
    res = solve_lp(base_lp, backend=backend)
    if res.status == LpStatus.INFEASIBLE:
        sol = Solution(SolutionStatus.INFEASIBLE, None, None, math.nan)
        return sol, trace
    if res.status != LpStatus.OPTIMAL:
        raise RuntimeError(f"relaxation ended with status {res.status}")

    r_coeffs = {col: 1.0 for key, col in vix.index.items() if key[0] == "r"}
    x = extract_placement(instance, vix, res.x)
    g = routing_cost(vix, res.x)
    gap = x.binarity_gap()
    trace.stages.append(PsumStageRecord(
        stage=0, sigma=0.0, eps=cfg.eps1, g=g,
        penalty=penalty_value(instance, x, cfg.p, cfg.eps1),
        penalized=g, binarity_gap=gap, lp_iterations=res.iterations,
        wall_ms=(time.perf_counter() - stage_start) * 1e3))
    warm = res.warm_start()

    t = 0
    while gap > cfg.binarity_tol and t < stage_limit:
        sigma = cfg.sigma1 * cfg.gamma ** t
        eps = cfg.eps1 * cfg.eta ** t
        stage_start = time.perf_counter()
        grad = penalty_gradient(instance, x, cfg.p, eps)
        coeffs = dict(r_coeffs)
        for (k, s, i), gval in grad.items():
            coeffs[vix.col(("x", k, s, i))] = sigma * gval
        sub = base_lp.with_objective(coeffs)
        res = solve_lp(sub, warm=warm, backend=backend)
        if res.status != LpStatus.OPTIMAL:
            raise RuntimeError(f"stage {t + 1} ended with status {res.status}")
        ref = g + sigma * penalty_value(instance, x, cfg.p, eps)
        x = extract_placement(instance, vix, res.x)
        g = routing_cost(vix, res.x)
        penalty = penalty_value(instance, x, cfg.p, eps)
        gap = x.binarity_gap()
        trace.stages.append(PsumStageRecord(
            stage=t + 1, sigma=sigma, eps=eps, g=g, penalty=penalty,
            penalized=g + sigma * penalty, binarity_gap=gap,
            lp_iterations=res.iterations,
            wall_ms=(time.perf_counter() - stage_start) * 1e3,
            ref_penalized=ref))
        warm = res.warm_start()
        t += 1

    if gap <= cfg.binarity_tol:
        placement = binary_placement_from_fractional(instance, x, cfg.binarity_tol)
        sol, _ = _certify_binary(instance, placement, backend)
        if sol is not None:
            sol = Solution(
                status=sol.status, placement=sol.placement, routing=sol.routing,
                objective=sol.objective,
                wall_time_ms=(time.perf_counter() - start) * 1e3)
            return sol, trace
        # certification failed numerically; fall through to the repair path
        trace.rounded = True
    else:
        trace.rounded = True
        placement = round_placement(instance, x, theta)
    sol = repair_routing(instance, placement, tau=tau, backend=backend)
    sol = Solution(
        status=sol.status, placement=sol.placement, routing=sol.routing,
        objective=sol.objective, delta=sol.delta, failed_flows=sol.failed_flows,
        wall_time_ms=(time.perf_counter() - start) * 1e3)
    return sol, trace


def psum_solve(
    instance: ProblemInstance,
    cfg: PsumConfig | None = None,
    rcfg: PsumRConfig | None = None,
    backend: str = "bundled",
) -> tuple[Solution, PsumTrace]:
    """Full continuation: up to cfg.t_max penalty stages, rounding as last resort."""
    cfg = cfg or PsumConfig()
    rcfg = rcfg or PsumRConfig()
    return _engine(instance, cfg, cfg.t_max, rcfg.theta,
                   rcfg.tau if rcfg.tau is not None else default_tau(instance),
                   backend)


def psum_r_solve(
    instance: ProblemInstance,
    cfg: PsumConfig | None = None,
    rcfg: PsumRConfig | None = None,
    backend: str = "bundled",
) -> tuple[Solution, PsumTrace]:
    """Truncated continuation (rcfg.t_max stages) followed by rounding + repair."""
    cfg = cfg or PsumConfig()
    rcfg = rcfg or PsumRConfig()
    return _engine(instance, cfg, rcfg.t_max, rcfg.theta,
                   rcfg.tau if rcfg.tau is not None else default_tau(instance),
                   backend)
