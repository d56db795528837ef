"""Directed BFS utilities shared by the builders, heuristics, and oracle."""

from __future__ import annotations

import math
from collections import deque

from .model import ProblemInstance


def hops_from(instance: ProblemInstance, source: int) -> list[float]:
    """Hop distance from ``source`` to every node (math.inf if unreachable)."""
    dist = [math.inf] * instance.n_nodes
    dist[source] = 0.0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for li in instance.out_links[u]:
            v = instance.links[li].head
            if math.isinf(dist[v]):
                dist[v] = dist[u] + 1.0
                queue.append(v)
    return dist


def hops_to(instance: ProblemInstance, target: int) -> list[float]:
    """Hop distance from every node to ``target`` (math.inf if unreachable)."""
    dist = [math.inf] * instance.n_nodes
    dist[target] = 0.0
    queue = deque([target])
    while queue:
        u = queue.popleft()
        for li in instance.in_links[u]:
            v = instance.links[li].tail
            if math.isinf(dist[v]):
                dist[v] = dist[u] + 1.0
                queue.append(v)
    return dist


def reachability(instance: ProblemInstance) -> list[list[bool]]:
    """Boolean all-pairs reachability matrix (i can reach j)."""
    n = instance.n_nodes
    reach = []
    for i in range(n):
        dist = hops_from(instance, i)
        reach.append([math.isfinite(d) for d in dist])
    return reach
