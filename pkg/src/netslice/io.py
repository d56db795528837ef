"""Instance and solution file I/O.

Documents are JSON.  Writers emit a canonical form: object keys sorted,
arrays in a fixed order (nodes sorted, links by endpoint pair, flows by
id), floats at full round-trip precision.  ``read_instance`` after
``write_instance`` reproduces an equal instance, and a second write is
byte-identical.
"""

from __future__ import annotations

import io
import json
import math
from typing import IO, Mapping

from .model import (
    FractionalPlacement,
    Placement,
    ProblemInstance,
    RoutingPlan,
    Solution,
    SolutionStatus,
    ValidationError,
)


class InstanceFormatError(ValueError):
    """The document is not parseable or misses required fields."""


def _load_json(source: bytes | str | IO) -> object:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _dump_json(obj: object) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _require(doc: Mapping, key: str, kind: type) -> object:
    if key not in doc:
        raise InstanceFormatError(f"missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise InstanceFormatError(f"field {key!r} must be {kind.__name__}")
    return value


def read_instance(source: bytes | str | IO) -> ProblemInstance:
    """Parse and validate an instance document."""
    doc = _load_json(source)
    if not isinstance(doc, dict):
        raise InstanceFormatError("top-level document must be an object")
    nodes = _require(doc, "nodes", list)
    links_raw = _require(doc, "links", list)
    caps = _require(doc, "node_capacities", dict)
    functions = _require(doc, "functions", dict)
    flows_raw = _require(doc, "flows", list)

    links = []
    for i, entry in enumerate(links_raw):
        if not isinstance(entry, dict) or not {"from", "to", "capacity"} <= entry.keys():
            raise InstanceFormatError(f"links[{i}] must have from/to/capacity")
        links.append((entry["from"], entry["to"], float(entry["capacity"])))
    flows = []
    for i, entry in enumerate(flows_raw):
        if not isinstance(entry, dict) or not {"id", "src", "dst", "rate"} <= entry.keys():
            raise InstanceFormatError(f"flows[{i}] must have id/src/dst/rate")
        flows.append(entry)
    return ProblemInstance.build(nodes, links, caps, functions, flows)


def write_instance(instance: ProblemInstance) -> bytes:
    doc = {
        "nodes": list(instance.node_ids),
        "links": [
            {"from": instance.node_ids[l.tail], "to": instance.node_ids[l.head],
             "capacity": l.capacity}
            for l in instance.links
        ],
        "node_capacities": {
            instance.node_ids[i]: mu
            for i, mu in enumerate(instance.node_caps)
            if math.isfinite(mu)
        },
        "functions": {
            f: [instance.node_ids[i] for i in members]
            for f, members in instance.functions.items()
        },
        "flows": [
            {"id": fl.id, "src": instance.node_ids[fl.src],
             "dst": instance.node_ids[fl.dst], "rate": fl.rate,
             "chain": list(fl.chain)}
            for fl in instance.flows
        ],
    }
    return _dump_json(doc)


# -- solutions ------------------------------------------------------------


def write_solution(instance: ProblemInstance, solution: Solution,
                   violations: Mapping | None = None) -> bytes:
    placement_entries = []
    if isinstance(solution.placement, Placement):
        frac = solution.placement.to_fractional(instance)
    else:
        frac = solution.placement
    if frac is not None:
        for (k, s, i) in sorted(frac.values):
            placement_entries.append({
                "flow": instance.flows[k].id,
                "position": s,
                "node": instance.node_ids[i],
                "value": frac.values[(k, s, i)],
            })
    route_entries = []
    if solution.routing is not None:
        for (k, s, li) in sorted(solution.routing.virtual_rates):
            link = instance.links[li]
            route_entries.append({
                "flow": instance.flows[k].id,
                "stage": s,
                "from": instance.node_ids[link.tail],
                "to": instance.node_ids[link.head],
                "rate": solution.routing.virtual_rates[(k, s, li)],
            })
    doc = {
        "status": solution.status.value,
        "objective": solution.objective,
        "placement": placement_entries,
        "routes": route_entries,
        "violations": dict(violations) if violations is not None else None,
        "wall_time_ms": solution.wall_time_ms,
    }
    if solution.delta is not None:
        doc["delta"] = solution.delta
    if solution.failed_flows:
        doc["failed_flows"] = list(solution.failed_flows)
    return _dump_json(doc)


def read_solution(instance: ProblemInstance, source: bytes | str | IO) -> Solution:
    """Parse a solution document against its instance (ids resolved to indexes)."""
    doc = _load_json(source)
    if not isinstance(doc, dict):
        raise InstanceFormatError("top-level document must be an object")
    status = SolutionStatus(_require(doc, "status", str))
    flow_index = {fl.id: k for k, fl in enumerate(instance.flows)}
    link_index = {(l.tail, l.head): li for li, l in enumerate(instance.links)}

    values: dict[tuple[int, int, int], float] = {}
    for entry in _require(doc, "placement", list):
        k = flow_index.get(entry["flow"])
        i = instance.node_index.get(entry["node"])
        if k is None or i is None:
            raise ValidationError(f"placement entry references unknown flow/node: {entry}")
        values[(k, int(entry["position"]), i)] = float(entry["value"])
    rates: dict[tuple[int, int, int], float] = {}
    for entry in _require(doc, "routes", list):
        k = flow_index.get(entry["flow"])
        u = instance.node_index.get(entry["from"])
        v = instance.node_index.get(entry["to"])
        li = link_index.get((u, v)) if u is not None and v is not None else None
        if k is None or li is None:
            raise ValidationError(f"route entry references unknown flow/link: {entry}")
        rates[(k, int(entry["stage"]), li)] = float(entry["rate"])

    return Solution(
        status=status,
        placement=FractionalPlacement(values) if values else None,
        routing=RoutingPlan(rates) if rates or status != SolutionStatus.INFEASIBLE else None,
        objective=float(_require(doc, "objective", (int, float))),
        wall_time_ms=float(doc.get("wall_time_ms", 0.0)),
        delta=float(doc["delta"]) if "delta" in doc else None,
        failed_flows=tuple(doc.get("failed_flows", ())),
    )


def read_instance_file(path: str) -> ProblemInstance:
    with io.open(path, "rb") as fh:
        return read_instance(fh)
