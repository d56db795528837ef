"""Fixed-column MPS text dump of a LinearProgram, for external cross-checks."""

from __future__ import annotations

import math

from .program import LinearProgram


def _field(value: str, width: int) -> str:
    return value[:width].ljust(width)


def to_mps(lp: LinearProgram, name: str = "NETSLICE") -> str:
    lines = [f"NAME          {name}"]
    lines.append("ROWS")
    lines.append(" N  COST")
    sense_code = {"<": "L", "=": "E", ">": "G"}
    for i, s in enumerate(lp.senses):
        lines.append(f" {sense_code[s]}  R{i}")

    # column section needs row-major-per-column entries
    by_col: dict[int, list[tuple[str, float]]] = {}
    for i in range(lp.n_rows):
        for j, a in lp.row_entries(i):
            by_col.setdefault(j, []).append((f"R{i}", a))
    obj = lp.objective
    lines.append("COLUMNS")
    for j in range(lp.n_vars):
        entries = list(by_col.get(j, []))
        if obj[j] != 0.0:
            entries.insert(0, ("COST", float(obj[j])))
        cname = lp.name_of(j)
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            line = "    " + _field(cname, 10)
            for rname, a in pair:
                line += _field(rname, 10) + _field(f"{a:.12g}", 15)
            lines.append(line.rstrip())

    lines.append("RHS")
    rhs = lp.rhs
    for i in range(0, lp.n_rows):
        if rhs[i] != 0.0:
            lines.append("    " + _field("RHS", 10) + _field(f"R{i}", 10)
                         + _field(f"{rhs[i]:.12g}", 15).rstrip())

    lines.append("BOUNDS")
    lb, ub = lp.lb, lp.ub
    for j in range(lp.n_vars):
        cname = lp.name_of(j)
        lo, hi = lb[j], ub[j]
        if lo == 0.0 and math.isinf(hi):
            continue  # default bound
        if lo == hi:
            lines.append(" FX " + _field("BND", 10) + _field(cname, 10)
                         + f"{lo:.12g}")
            continue
        if math.isinf(lo) and math.isinf(hi):
            lines.append(" FR " + _field("BND", 10) + cname)
            continue
        if not math.isinf(lo) and lo != 0.0:
            lines.append(" LO " + _field("BND", 10) + _field(cname, 10)
                         + f"{lo:.12g}")
        elif math.isinf(lo):
            lines.append(" MI " + _field("BND", 10) + cname)
        if not math.isinf(hi):
            lines.append(" UP " + _field("BND", 10) + _field(cname, 10)
                         + f"{hi:.12g}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
