"""Seeded instance generators: mesh, layered fish, matching reduction, gadgets.

All randomness flows through numpy's PCG64 generator seeded with the
64-bit seed in the params, so identical (params, seed) pairs reproduce
byte-identical instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ProblemInstance


@dataclass(frozen=True)
class MeshParams:
    rows: int = 10
    cols: int = 10
    diagonals: bool = True
    band: tuple[int, int] = (3, 7)     # half-open column range hosting functions
    n_functions: int = 5
    nodes_per_function: int = 10
    n_flows: int = 30
    rate: float = 1.0
    cap_range: tuple[float, float] = (0.5, 5.5)
    node_cap_range: tuple[float, float] = (0.5, 8.0)
    chain_length: int = 2

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must be nonempty")
        lo, hi = self.band
        if not (0 <= lo < hi <= self.cols):
            raise ValueError("band must lie within the columns")
        band_nodes = (hi - lo) * self.rows
        if self.nodes_per_function > band_nodes:
            raise ValueError("candidate set larger than the band")
        if self.chain_length > self.n_functions:
            raise ValueError("chain longer than the function pool")


def gen_mesh(params: MeshParams, seed: int) -> ProblemInstance:
    """Grid with horizontal/vertical (and both diagonal) neighbor links.

    Every undirected neighbor pair becomes two directed links with
    independently drawn capacities.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    R, C = params.rows, params.cols

    def nid(r: int, c: int) -> str:
        return f"n{r:02d}{c:02d}"

    nodes = [nid(r, c) for r in range(R) for c in range(C)]
    pairs: list[tuple[str, str]] = []
    for r in range(R):
        for c in range(C):
            if c + 1 < C:
                pairs.append((nid(r, c), nid(r, c + 1)))
            if r + 1 < R:
                pairs.append((nid(r, c), nid(r + 1, c)))
            if params.diagonals and r + 1 < R and c + 1 < C:
                pairs.append((nid(r, c), nid(r + 1, c + 1)))
            if params.diagonals and r + 1 < R and c - 1 >= 0:
                pairs.append((nid(r, c), nid(r + 1, c - 1)))
    links = []
    lo, hi = params.cap_range
    for u, v in pairs:
        links.append((u, v, float(rng.uniform(lo, hi))))
        links.append((v, u, float(rng.uniform(lo, hi))))

    mu_lo, mu_hi = params.node_cap_range
    node_caps = {v: float(rng.uniform(mu_lo, mu_hi)) for v in nodes}

    band_lo, band_hi = params.band
    band_nodes = [nid(r, c) for r in range(R) for c in range(band_lo, band_hi)]
    functions = {}
    for fi in range(params.n_functions):
        chosen = rng.choice(len(band_nodes), size=params.nodes_per_function,
                            replace=False)
        functions[f"f{fi + 1}"] = [band_nodes[j] for j in sorted(chosen)]

    fnames = sorted(functions)
    flows = []
    for ki in range(params.n_flows):
        chain_idx = rng.choice(len(fnames), size=params.chain_length, replace=False)
        chain = [fnames[j] for j in chain_idx]
        excluded = {v for f in chain for v in functions[f]}
        eligible = [v for v in nodes if v not in excluded]
        if len(eligible) < 2:
            raise ValueError("no eligible endpoints outside the candidate sets")
        src = eligible[int(rng.integers(len(eligible)))]
        dst = src
        while dst == src:
            dst = eligible[int(rng.integers(len(eligible)))]
        flows.append({"id": f"k{ki:03d}", "src": src, "dst": dst,
                      "rate": params.rate, "chain": chain})
    return ProblemInstance.build(nodes, links, node_caps, functions, flows)


# -- layered topology with one destination -----------------------------------


@dataclass(frozen=True)
class FishParams:
    """Layered approximation of the 112-node / 440-link benchmark topology.

    ``layer_sizes`` runs from the farthest layer down to the destination
    layer (whose size must be 1); links only point toward the destination,
    one layer at a time.  Function nodes live in two adjacent mid layers so
    chains of length two stay routable.
    """

    layer_sizes: tuple[int, ...] = (12, 12, 12, 12, 11, 11, 11, 11, 10, 9, 1)
    function_layers: tuple[int, int] = (5, 6)
    functions_per_layer: int = 3
    n_functions: int = 4
    fanout: int = 4
    n_flows: int = 20
    rate_range: tuple[int, int] = (1, 5)
    cap_master_range: tuple[float, float] = (1.0, 55.0)
    n_subintervals: int = 10
    node_cap: float = 16.0
    chain_length: int = 1
    source_layer_limit: int = 5      # sources come from layers [0, limit)

    def validate(self) -> None:
        if not self.layer_sizes or any(s < 1 for s in self.layer_sizes):
            raise ValueError("layers must be nonempty")
        if self.layer_sizes[-1] != 1:
            raise ValueError("destination layer must have exactly one node")
        la, lb = self.function_layers
        if not (0 <= la < lb < len(self.layer_sizes) - 1):
            raise ValueError("function layers must be distinct interior layers")
        if self.functions_per_layer > min(self.layer_sizes[la], self.layer_sizes[lb]):
            raise ValueError("not enough nodes in a function layer")
        if self.chain_length > self.n_functions:
            raise ValueError("chain longer than the function pool")
        if not (0 < self.source_layer_limit <= la):
            raise ValueError("sources must precede the function layers")


def gen_fish(params: FishParams, seed: int) -> ProblemInstance:
    params.validate()
    rng = np.random.default_rng(seed)
    layers: list[list[str]] = []
    for q, size in enumerate(params.layer_sizes):
        layers.append([f"l{q:02d}n{j:02d}" for j in range(size)])
    nodes = [v for layer in layers for v in layer]
    dest = layers[-1][0]

    lo, hi = params.cap_master_range
    width = (hi - lo) / params.n_subintervals

    def capacity(layer_pos: int) -> float:
        # links leaving layer position q use the (q+1)-th sub-interval:
        # small capacities far from the destination, large next to it
        sub = min(layer_pos, params.n_subintervals - 1)
        return float(rng.uniform(lo + sub * width, lo + (sub + 1) * width))

    links: list[tuple[str, str, float]] = []
    seen: set[tuple[str, str]] = set()

    def add_link(u: str, v: str, q: int) -> None:
        if (u, v) not in seen:
            seen.add((u, v))
            links.append((u, v, capacity(q)))

    for q in range(len(layers) - 1):
        nxt = layers[q + 1]
        incoming = {v: 0 for v in nxt}
        for u in layers[q]:
            fan = min(params.fanout, len(nxt))
            targets = rng.choice(len(nxt), size=fan, replace=False)
            for t in sorted(targets):
                add_link(u, nxt[t], q)
                incoming[nxt[t]] += 1
        for v, cnt in incoming.items():
            if cnt == 0 and q > 0:
                u = layers[q][int(rng.integers(len(layers[q])))]
                add_link(u, v, q)

    la, lb = params.function_layers
    fnodes_a = [layers[la][j] for j in range(params.functions_per_layer)]
    fnodes_b = [layers[lb][j] for j in range(params.functions_per_layer)]
    for u in fnodes_a:            # function nodes of adjacent layers interconnect
        for v in fnodes_b:
            if lb == la + 1:
                add_link(u, v, la)
    fnodes = fnodes_a + fnodes_b
    functions = {f"f{j + 1}": list(fnodes) for j in range(params.n_functions)}
    node_caps = {v: params.node_cap for v in fnodes}

    fnames = sorted(functions)
    source_pool = [v for q in range(params.source_layer_limit) for v in layers[q]
                   if v not in fnodes]
    flows = []
    r_lo, r_hi = params.rate_range
    for ki in range(params.n_flows):
        chain_idx = rng.choice(len(fnames), size=params.chain_length, replace=False)
        chain = [fnames[j] for j in chain_idx]
        src = source_pool[int(rng.integers(len(source_pool)))]
        rate = float(rng.integers(r_lo, r_hi + 1))
        flows.append({"id": f"k{ki:03d}", "src": src, "dst": dest,
                      "rate": rate, "chain": chain})
    return ProblemInstance.build(nodes, links, node_caps, functions, flows)


# -- matching reduction -------------------------------------------------------


@dataclass(frozen=True)
class TripleSet:
    """Index triples over three K-element families."""

    k: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        for t in self.triples:
            if len(t) != 3 or any(not 0 <= v < self.k for v in t):
                raise ValueError(f"triple {t!r} out of range")


def random_triple_set(k: int, n_triples: int, seed: int) -> TripleSet:
    rng = np.random.default_rng(seed)
    universe = [(x, y, z) for x in range(k) for y in range(k) for z in range(k)]
    chosen = rng.choice(len(universe), size=min(n_triples, len(universe)),
                        replace=False)
    return TripleSet(k, tuple(universe[j] for j in sorted(chosen)))


def gen_3dm(triples: TripleSet, rate: float = 1.0) -> ProblemInstance:
    """Layered network whose feasibility encodes a triple-matching search.

    Sources connect to all first-family nodes, triples contribute the
    x->y and y->z links, third-family nodes connect to all destinations.
    Function-node capacity 1.5x the rate admits at most one assignment
    per node; link capacity 4*K*rate never binds.
    """
    K = triples.k
    xs = [f"x{j}" for j in range(K)]
    ys = [f"y{j}" for j in range(K)]
    zs = [f"z{j}" for j in range(K)]
    ss = [f"s{j}" for j in range(K)]
    ds = [f"d{j}" for j in range(K)]
    nodes = ss + xs + ys + zs + ds
    cap = 4.0 * K * rate
    links = [(s, x, cap) for s in ss for x in xs]
    link_pairs = set()
    for (x, y, z) in triples.triples:
        link_pairs.add((xs[x], ys[y]))
        link_pairs.add((ys[y], zs[z]))
    links += [(u, v, cap) for (u, v) in sorted(link_pairs)]
    links += [(z, d, cap) for z in zs for d in ds]
    node_caps = {v: 1.5 * rate for v in xs + ys + zs}
    functions = {}
    flows = []
    for j in range(K):
        f1, f2, f3 = f"f1_{j}", f"f2_{j}", f"f3_{j}"
        functions[f1] = list(xs)
        functions[f2] = list(ys)
        functions[f3] = list(zs)
        flows.append({"id": f"k{j}", "src": ss[j], "dst": ds[j],
                      "rate": rate, "chain": [f1, f2, f3]})
    return ProblemInstance.build(nodes, links, node_caps, functions, flows)


def realizable_triples(instance: ProblemInstance) -> tuple[tuple[int, int, int], ...]:
    """Triples (x, y, z) whose both hops exist as links in the instance.

    This is the triple relation the generated network actually encodes:
    two triple sets with equal pairwise projections generate identical
    instances, so matching existence is decided on this closure.
    """
    idx = instance.node_index
    k = sum(1 for v in instance.node_ids if v.startswith("x"))
    out: list[tuple[int, int, int]] = []
    link_set = {(l.tail, l.head) for l in instance.links}
    for x in range(k):
        for y in range(k):
            if (idx[f"x{x}"], idx[f"y{y}"]) not in link_set:
                continue
            for z in range(k):
                if (idx[f"y{y}"], idx[f"z{z}"]) in link_set:
                    out.append((x, y, z))
    return tuple(out)


# -- tightness gadgets --------------------------------------------------------


@dataclass(frozen=True)
class TightnessParams:
    case: str = "node"               # "node" or "link"
    eps: float = 0.25
    big_cap: float = 16.0
    alt_node_cap: float = 16.0       # capacity of the detour host v6
    short_node_cap: float = 8.0      # capacity of v3 in the link case

    def validate(self) -> None:
        if self.case not in ("node", "link"):
            raise ValueError("case must be 'node' or 'link'")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError("eps must lie in [0, 1)")


def gen_tightness(params: TightnessParams) -> ProblemInstance:
    """Single-flow network with a 6-hop walk through v3 and a 7-hop path via v6.

    The node case prices v3 at capacity 1 - eps, the link case prices the
    twice-used link (v1, v2) at 2(1 - eps); either way the relaxation
    optimum splits 6(1-eps) + 7 eps with a fractional placement.  The
    detour host v6 keeps the larger capacity so capacity-aware rounding
    prefers the host that can carry the whole flow.
    """
    params.validate()
    nodes = ["S", "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9", "D"]
    arcs = [("S", "v1"), ("v1", "v2"), ("v2", "v3"), ("v3", "v1"), ("v2", "D"),
            ("S", "v4"), ("v4", "v5"), ("v5", "v6"), ("v6", "v7"),
            ("v7", "v8"), ("v8", "v9"), ("v9", "D")]
    links = []
    for u, v in arcs:
        cap = params.big_cap
        if params.case == "link" and (u, v) == ("v1", "v2"):
            cap = 2.0 * (1.0 - params.eps)
        links.append((u, v, cap))
    node_caps = {v: params.big_cap for v in nodes}
    node_caps["v6"] = params.alt_node_cap
    node_caps["v3"] = (1.0 - params.eps) if params.case == "node" \
        else params.short_node_cap
    functions = {"f1": ["v3", "v6"]}
    flows = [{"id": "k0", "src": "S", "dst": "D", "rate": 1.0, "chain": ["f1"]}]
    return ProblemInstance.build(nodes, links, node_caps, functions, flows)
