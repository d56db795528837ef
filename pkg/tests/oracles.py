"""Independent reference implementations used only as test oracles.

Nothing here imports the package's solver or graph code: the point is a
second, structurally different path to the same answers.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

# -- dense two-phase tableau simplex ------------------------------------------


def tableau_lp_solve(c, A_rows, senses, b, lb, ub):
    """Textbook dense tableau simplex on the standard-form transform.

    Each variable is shifted/split to x' >= 0 (finite upper bounds become
    extra rows), then a two-phase dense tableau with Bland's rule runs to
    optimality.  Returns (status, objective) with status in
    {"optimal", "infeasible", "unbounded"}.
    """
    n = len(c)
    shift = [0.0] * n
    cols: list[tuple[int, float]] = []      # (original var, sign)
    extra_rows: list[tuple[dict[int, float], str, float]] = []
    for j in range(n):
        l, u = lb[j], ub[j]
        if math.isfinite(l):
            shift[j] = l
            t = len(cols)
            cols.append((j, 1.0))
            if math.isfinite(u):
                extra_rows.append(({t: 1.0}, "<", u - l))
        elif math.isfinite(u):
            shift[j] = u
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))

    def transform(coeffs: dict[int, float]) -> tuple[dict[int, float], float]:
        out: dict[int, float] = {}
        const = 0.0
        for t, (j, sign) in enumerate(cols):
            a = coeffs.get(j, 0.0)
            if a != 0.0:
                out[t] = out.get(t, 0.0) + a * sign
        for j, a in coeffs.items():
            const += a * shift[j]
        return out, const

    rows: list[tuple[dict[int, float], str, float]] = []
    for coeffs, sense, rhs in zip(A_rows, senses, b):
        trow, const = transform(dict(coeffs))
        rows.append((trow, sense, rhs - const))
    rows.extend(extra_rows)

    nt = len(cols)
    m = len(rows)
    norm_rows = []
    for coeffs, sense, rhs in rows:
        row = [coeffs.get(t, 0.0) for t in range(nt)]
        if rhs < 0:
            row = [-a for a in row]
            rhs = -rhs
            sense = {"<": ">", ">": "<", "=": "="}[sense]
        norm_rows.append((row, sense, rhs))

    total = nt
    slack_index: dict[int, int] = {}
    art_index: dict[int, int] = {}
    for i, (_row, sense, _rhs) in enumerate(norm_rows):
        if sense in ("<", ">"):
            slack_index[i] = total
            total += 1
    for i, (_row, sense, _rhs) in enumerate(norm_rows):
        if sense in (">", "="):
            art_index[i] = total
            total += 1

    grid = np.zeros((m, total))
    rhs_vec = np.zeros(m)
    basis = [0] * m
    for i, (row, sense, rhs) in enumerate(norm_rows):
        grid[i, :nt] = row
        rhs_vec[i] = rhs
        if sense == "<":
            grid[i, slack_index[i]] = 1.0
        elif sense == ">":
            grid[i, slack_index[i]] = -1.0
        if i in art_index:
            grid[i, art_index[i]] = 1.0
        basis[i] = art_index.get(i, slack_index.get(i, 0))

    def run(obj: np.ndarray) -> str:
        for _ in range(50000):
            z = obj[basis] @ grid - obj
            enter = -1
            for j in range(total):
                if j not in basis and z[j] > 1e-9:
                    enter = j
                    break                      # Bland's rule
            if enter < 0:
                return "optimal"
            ratios = [(rhs_vec[i] / grid[i, enter], basis[i], i)
                      for i in range(m) if grid[i, enter] > 1e-9]
            if not ratios:
                return "unbounded"
            _r, _bv, leave = min(ratios, key=lambda t: (t[0], t[1]))
            piv = grid[leave, enter]
            grid[leave] /= piv
            rhs_vec[leave] /= piv
            for i in range(m):
                if i != leave and abs(grid[i, enter]) > 1e-14:
                    f = grid[i, enter]
                    grid[i] -= f * grid[leave]
                    rhs_vec[i] -= f * rhs_vec[leave]
            basis[leave] = enter
        raise RuntimeError("tableau iteration limit")

    obj1 = np.zeros(total)
    for col in art_index.values():
        obj1[col] = 1.0
    if run(obj1) != "optimal" or obj1[basis] @ rhs_vec > 1e-7:
        return "infeasible", math.nan
    for col in art_index.values():       # artificials may not re-enter
        grid[:, col] = 0.0
    obj2 = np.zeros(total)
    for t, (j, sign) in enumerate(cols):
        obj2[t] = c[j] * sign
    status = run(obj2)
    if status == "unbounded":
        return "unbounded", math.nan
    x_t = np.zeros(total)
    for i in range(m):
        x_t[basis[i]] = rhs_vec[i]
    const = sum(c[j] * shift[j] for j in range(n))
    return "optimal", float(obj2 @ x_t) + const


# -- combinatorial oracles -----------------------------------------------------


def three_dim_matching_exists(triples, k: int) -> bool:
    """Exact search for k pairwise-disjoint triples."""
    triples = list(triples)

    def rec(start: int, used_x, used_y, used_z, count: int) -> bool:
        if count == k:
            return True
        for idx in range(start, len(triples)):
            x, y, z = triples[idx]
            if x in used_x or y in used_y or z in used_z:
                continue
            if rec(idx + 1, used_x | {x}, used_y | {y}, used_z | {z}, count + 1):
                return True
        return False

    return rec(0, frozenset(), frozenset(), frozenset(), 0)


def bipartite_perfect_matching(pairs, k: int) -> bool:
    """Augmenting-path test for a perfect matching on {0..k-1} x {0..k-1}."""
    adj: dict[int, list[int]] = {}
    for a, b in pairs:
        adj.setdefault(a, []).append(b)
    match: dict[int, int] = {}

    def augment(a: int, seen: set[int]) -> bool:
        for b in adj.get(a, []):
            if b in seen:
                continue
            seen.add(b)
            if b not in match or augment(match[b], seen):
                match[b] = a
                return True
        return False

    return all(augment(a, set()) for a in range(k))


def bfs_hops(n_nodes: int, arcs, src: int) -> list[float]:
    """Plain BFS hop counts along directed arcs (tail, head)."""
    adj: dict[int, list[int]] = {}
    for u, v in arcs:
        adj.setdefault(u, []).append(v)
    dist = [math.inf] * n_nodes
    dist[src] = 0.0
    dq = deque([src])
    while dq:
        u = dq.popleft()
        for v in adj.get(u, []):
            if math.isinf(dist[v]):
                dist[v] = dist[u] + 1.0
                dq.append(v)
    return dist


def stagewise_shortest_cost(n_nodes: int, arcs, waypoints, rate: float) -> float:
    """rate x total hops of the shortest waypoint-to-waypoint path chain.

    Valid as a routing-cost oracle when no capacity binds.
    """
    total = 0.0
    for a, b in zip(waypoints, waypoints[1:]):
        if a == b:
            continue
        d = bfs_hops(n_nodes, arcs, a)[b]
        if math.isinf(d):
            return math.inf
        total += d
    return total * rate


def simplex_block_descent(m: int, p: float, eps: float, start) -> tuple[np.ndarray, float]:
    """Iterate the linearized concave step over the probability simplex.

    Each step minimizes grad(x_t).x over the simplex, i.e. puts all mass
    on the coordinate with the smallest p (x_i + eps)^(p-1) (the largest
    x_i).  Returns the fixed point and its block value ||x + eps||_p^p.
    """
    x = np.asarray(start, dtype=float)
    assert abs(x.sum() - 1.0) < 1e-9
    for _ in range(100):
        grad = p * (x + eps) ** (p - 1.0)
        j = int(np.argmin(grad))
        new = np.zeros(m)
        new[j] = 1.0
        if np.array_equal(new, x):
            break
        x = new
    return x, float(((x + eps) ** p).sum())
