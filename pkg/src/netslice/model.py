"""Domain model: problem instances, placements, routing plans, solutions.

All types are immutable after construction and safe to share across
threads.  Node, link, and function identifiers are opaque strings in
files; internally every node is mapped to a dense integer index (the
mapping is part of the instance) so the numerical code can use arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence


class ValidationError(ValueError):
    """An instance or solution violates a structural invariant."""


class SolutionStatus(str, Enum):
    OPTIMAL_RELAXATION = "optimal-relaxation"
    BINARY_FEASIBLE = "binary-feasible"
    BINARY_WITH_VIOLATIONS = "binary-with-violations"
    INFEASIBLE = "infeasible"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class Link:
    tail: int
    head: int
    capacity: float


@dataclass(frozen=True)
class ServiceRequest:
    """One flow: source, destination, rate, and an ordered function chain."""

    id: str
    src: int
    dst: int
    rate: float
    chain: tuple[str, ...]

    @property
    def n_functions(self) -> int:
        return len(self.chain)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Directed network with capacities, function candidate sets, and flows.

    ``node_ids`` is sorted; ``flows`` is sorted by flow id.  Both orders
    are relied on by the algorithms for determinism.
    """

    node_ids: tuple[str, ...]
    links: tuple[Link, ...]
    node_caps: tuple[float, ...]            # math.inf where unconstrained
    functions: dict[str, tuple[int, ...]]   # function id -> sorted node indexes
    flows: tuple[ServiceRequest, ...]

    node_index: dict[str, int] = field(repr=False, default_factory=dict)
    out_links: tuple[tuple[int, ...], ...] = field(repr=False, default=())
    in_links: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    @staticmethod
    def build(
        nodes: Iterable[str],
        links: Iterable[tuple[str, str, float]],
        node_capacities: Mapping[str, float],
        functions: Mapping[str, Iterable[str]],
        flows: Iterable[Mapping],
    ) -> "ProblemInstance":
        """Construct and validate an instance from string-keyed raw data."""
        node_ids = tuple(sorted(nodes))
        if len(node_ids) != len(set(node_ids)):
            raise ValidationError("duplicate node ids")
        index = {v: i for i, v in enumerate(node_ids)}

        def node(v: str, what: str) -> int:
            if v not in index:
                raise ValidationError(f"{what} references undeclared node {v!r}")
            return index[v]

        raw_links = []
        seen_pairs = set()
        for u, v, cap in links:
            ui, vi = node(u, "link"), node(v, "link")
            if ui == vi:
                raise ValidationError(f"self-loop link at node {u!r}")
            if (ui, vi) in seen_pairs:
                raise ValidationError(f"duplicate link ({u!r}, {v!r})")
            if not (cap >= 0.0):
                raise ValidationError(f"link ({u!r}, {v!r}) has negative capacity")
            seen_pairs.add((ui, vi))
            raw_links.append(Link(ui, vi, float(cap)))
        raw_links.sort(key=lambda l: (l.tail, l.head))

        caps = [math.inf] * len(node_ids)
        for v, mu in node_capacities.items():
            if not (mu >= 0.0):
                raise ValidationError(f"node {v!r} has negative capacity")
            caps[node(v, "node_capacities")] = float(mu)

        fsets: dict[str, tuple[int, ...]] = {}
        for f in sorted(functions):
            members = tuple(sorted(node(v, f"functions[{f!r}]") for v in functions[f]))
            if len(members) != len(set(members)):
                raise ValidationError(f"duplicate node in candidate set of {f!r}")
            fsets[f] = members

        reqs = []
        seen_ids = set()
        for raw in flows:
            fid = str(raw["id"])
            if fid in seen_ids:
                raise ValidationError(f"duplicate flow id {fid!r}")
            seen_ids.add(fid)
            src = node(raw["src"], f"flow {fid!r} src")
            dst = node(raw["dst"], f"flow {fid!r} dst")
            if src == dst:
                raise ValidationError(f"flow {fid!r} has identical src and dst")
            rate = float(raw["rate"])
            if not rate > 0.0:
                raise ValidationError(f"flow {fid!r} must have positive rate")
            chain = tuple(str(f) for f in raw.get("chain", ()))
            for f in chain:
                if f not in fsets:
                    raise ValidationError(f"flow {fid!r} references undeclared function {f!r}")
                if not fsets[f]:
                    raise ValidationError(f"function {f!r} has an empty candidate set")
            reqs.append(ServiceRequest(fid, src, dst, rate, chain))
        reqs.sort(key=lambda r: r.id)

        inst = ProblemInstance(
            node_ids=node_ids,
            links=tuple(raw_links),
            node_caps=tuple(caps),
            functions=fsets,
            flows=tuple(reqs),
        )
        inst._finalize()
        return inst

    def _finalize(self) -> None:
        object.__setattr__(self, "node_index", {v: i for i, v in enumerate(self.node_ids)})
        n = len(self.node_ids)
        outs: list[list[int]] = [[] for _ in range(n)]
        ins: list[list[int]] = [[] for _ in range(n)]
        for li, link in enumerate(self.links):
            outs[link.tail].append(li)
            ins[link.head].append(li)
        object.__setattr__(self, "out_links", tuple(tuple(o) for o in outs))
        object.__setattr__(self, "in_links", tuple(tuple(i) for i in ins))

    # -- convenience ----------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def candidates(self, function_id: str) -> tuple[int, ...]:
        return self.functions[function_id]

    def function_nodes(self) -> tuple[int, ...]:
        """Sorted union of all candidate sets."""
        union: set[int] = set()
        for members in self.functions.values():
            union.update(members)
        return tuple(sorted(union))

    def total_rate(self) -> float:
        return sum(f.rate for f in self.flows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.node_ids == other.node_ids
            and self.links == other.links
            and self.node_caps == other.node_caps
            and self.functions == other.functions
            and self.flows == other.flows
        )


# -- placements and routing ---------------------------------------------


@dataclass(frozen=True)
class FractionalPlacement:
    """Relaxed placement values x[(flow_idx, position, node_idx)] in [0, 1].

    Positions are 1-based chain positions.  ``func_aggregates`` and
    ``node_aggregates`` hold the per-(node, function) and per-node
    aggregate variables when the strengthened relaxation produced them.
    """

    values: dict[tuple[int, int, int], float]
    func_aggregates: dict[tuple[int, str], float] | None = None
    node_aggregates: dict[int, float] | None = None

    def block(self, instance: ProblemInstance, k: int, s: int) -> list[tuple[int, float]]:
        f = instance.flows[k].chain[s - 1]
        return [(i, self.values.get((k, s, i), 0.0)) for i in instance.candidates(f)]

    def binarity_gap(self) -> float:
        """Largest distance of any entry from {0, 1} (0.0 when empty)."""
        gap = 0.0
        for v in self.values.values():
            gap = max(gap, min(abs(v), abs(1.0 - v)))
        return gap

    def is_binary(self, tol: float) -> bool:
        return self.binarity_gap() <= tol


@dataclass(frozen=True)
class Placement:
    """Binary placement: one node per (flow_idx, chain position)."""

    assignment: dict[tuple[int, int], int]

    def validate(self, instance: ProblemInstance) -> None:
        for k, flow in enumerate(instance.flows):
            used: set[int] = set()
            for s, f in enumerate(flow.chain, start=1):
                if (k, s) not in self.assignment:
                    raise ValidationError(f"flow {flow.id!r} position {s} unassigned")
                i = self.assignment[(k, s)]
                if i not in instance.candidates(f):
                    raise ValidationError(
                        f"flow {flow.id!r} position {s} placed outside candidate set")
                if i in used:
                    raise ValidationError(
                        f"flow {flow.id!r} reuses node {instance.node_ids[i]!r}")
                used.add(i)

    def to_fractional(self, instance: ProblemInstance) -> FractionalPlacement:
        values: dict[tuple[int, int, int], float] = {}
        for k, flow in enumerate(instance.flows):
            for s, f in enumerate(flow.chain, start=1):
                chosen = self.assignment[(k, s)]
                for i in instance.candidates(f):
                    values[(k, s, i)] = 1.0 if i == chosen else 0.0
        return FractionalPlacement(values)

    def node_loads(self, instance: ProblemInstance) -> dict[int, float]:
        loads: dict[int, float] = {}
        for (k, _s), i in self.assignment.items():
            loads[i] = loads.get(i, 0.0) + instance.flows[k].rate
        return loads


@dataclass(frozen=True)
class RoutingPlan:
    """Virtual-flow rates keyed by (flow_idx, stage 0..n, link_idx).

    Stage s carries the portion of the flow that has been through the
    first s chain functions; only strictly positive rates are stored.
    """

    virtual_rates: dict[tuple[int, int, int], float]

    def flow_rates(self, k: int) -> dict[int, float]:
        """Per-link rate of flow k, summed over stages."""
        rates: dict[int, float] = {}
        for (kk, _s, li), r in self.virtual_rates.items():
            if kk == k:
                rates[li] = rates.get(li, 0.0) + r
        return rates

    def link_loads(self, n_links: int) -> list[float]:
        loads = [0.0] * n_links
        for (_k, _s, li), r in self.virtual_rates.items():
            loads[li] += r
        return loads

    def total_rate(self) -> float:
        return sum(self.virtual_rates.values())


@dataclass(frozen=True)
class Solution:
    """Result of one algorithm run on one instance."""

    status: SolutionStatus
    placement: FractionalPlacement | Placement | None
    routing: RoutingPlan | None
    objective: float
    wall_time_ms: float = 0.0
    delta: float | None = None            # repair-LP worst link overload, if used
    failed_flows: tuple[str, ...] = ()

    def objective_consistent(self, rel_tol: float = 1e-9) -> bool:
        """True when the stored objective matches the routed total rate.

        Solver paths guarantee this by construction; solution files edited
        by hand may not, which the verifier reports as data.
        """
        if self.routing is None:
            return True
        total = self.routing.total_rate()
        return abs(total - self.objective) <= rel_tol * max(1.0, abs(total))


def binary_placement_from_fractional(
    instance: ProblemInstance, frac: FractionalPlacement, tol: float
) -> Placement:
    """Snap an (already binary within tol) fractional placement to exact 0/1."""
    assignment: dict[tuple[int, int], int] = {}
    for k, flow in enumerate(instance.flows):
        for s in range(1, flow.n_functions + 1):
            block = frac.block(instance, k, s)
            best_i, best_v = max(block, key=lambda iv: (iv[1], -iv[0]))
            if best_v < 1.0 - tol:
                raise ValidationError(
                    f"block ({flow.id!r}, {s}) is not binary within {tol}")
            assignment[(k, s)] = best_i
    return Placement(assignment)


def stage_sequence(instance: ProblemInstance, placement: Placement, k: int) -> list[int]:
    """[src, placed nodes in chain order, dst] for flow index k."""
    flow = instance.flows[k]
    seq = [flow.src]
    for s in range(1, flow.n_functions + 1):
        seq.append(placement.assignment[(k, s)])
    seq.append(flow.dst)
    return seq
