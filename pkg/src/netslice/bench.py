"""Benchmark harness: seeded suites, per-run records, summary tables.

One record per (instance, algorithm) lands in ``records.csv``; summaries
hold the cumulative objective-ratio table over the xi grid 1.00..3.50
(step 0.01) and min/median/max of the worst violation ratios.  With
``measure_time=False`` all wall-time fields are written as zero so
repeated runs are byte-identical.
"""

from __future__ import annotations

import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

from .formulation import build_relaxation, extract_placement, extract_routing
from .generators import (
    FishParams,
    MeshParams,
    TightnessParams,
    TripleSet,
    gen_3dm,
    gen_fish,
    gen_mesh,
    gen_tightness,
    random_triple_set,
)
from .heuristics import (
    HeuristicIIIConfig,
    WeightingConfig,
    heuristic1,
    heuristic2,
    heuristic3,
    heuristic4,
)
from .lp import LpStatus, reset_solve_count, solve_lp
from .model import ProblemInstance, Solution, SolutionStatus
from .psum import PsumConfig, PsumRConfig, psum_r_solve, psum_solve
from .verify import check_feasibility

XI_GRID = [round(1.0 + 0.01 * j, 2) for j in range(251)]   # 1.00 .. 3.50

CSV_HEADER = ("instance_id,seed,algorithm,status,objective,lp_bound,ratio,"
              "max_link_viol_ratio,max_node_viol_ratio,delta,wall_ms,"
              "lp_solves,stages")


@dataclass(frozen=True)
class AlgoParams:
    """Shared parameter overrides handed to every algorithm."""

    psum: PsumConfig = field(default_factory=PsumConfig)
    psum_r: PsumRConfig = field(default_factory=PsumRConfig)
    weighting: WeightingConfig = field(default_factory=WeightingConfig)
    h3: HeuristicIIIConfig = field(default_factory=HeuristicIIIConfig)
    backend: str = "bundled"


@dataclass
class BenchRecord:
    instance_id: str
    seed: int
    algorithm: str
    status: str
    objective: float
    lp_bound: float
    ratio: float
    max_link_viol_ratio: float
    max_node_viol_ratio: float
    delta: float | None
    wall_ms: float
    lp_solves: int
    stages: int | None

    def csv_row(self) -> str:
        def num(v, fmt="{:.12g}") -> str:
            if v is None or (isinstance(v, float) and math.isnan(v)):
                return ""
            return fmt.format(v)

        return ",".join([
            self.instance_id, str(self.seed), self.algorithm, self.status,
            num(self.objective), num(self.lp_bound), num(self.ratio),
            num(self.max_link_viol_ratio), num(self.max_node_viol_ratio),
            num(self.delta), num(self.wall_ms, "{:.3f}"),
            str(self.lp_solves), "" if self.stages is None else str(self.stages),
        ])


def lp_relax_solve(instance: ProblemInstance, backend: str = "bundled"
                   ) -> tuple[Solution, None]:
    """Plain cut-free relaxation as a pseudo-algorithm (fractional output)."""
    t0 = time.perf_counter()
    lp, vix = build_relaxation(instance, with_cuts=False)
    res = solve_lp(lp, backend=backend)
    if res.status != LpStatus.OPTIMAL:
        return Solution(SolutionStatus.INFEASIBLE, None, None, math.nan,
                        wall_time_ms=(time.perf_counter() - t0) * 1e3), None
    sol = Solution(
        status=SolutionStatus.OPTIMAL_RELAXATION,
        placement=extract_placement(instance, vix, res.x),
        routing=extract_routing(instance, vix, res.x),
        objective=res.objective,
        wall_time_ms=(time.perf_counter() - t0) * 1e3)
    return sol, None


def run_algorithm(name: str, instance: ProblemInstance,
                  params: AlgoParams) -> tuple[Solution, int | None]:
    """Run one named algorithm; returns (solution, continuation stages or None)."""
    b = params.backend
    if name == "psum":
        sol, trace = psum_solve(instance, params.psum, params.psum_r, backend=b)
        return sol, len(trace.stages) - 1
    if name == "psum-r":
        sol, trace = psum_r_solve(instance, params.psum, params.psum_r, backend=b)
        return sol, len(trace.stages) - 1
    if name == "h1":
        return heuristic1(instance, params.weighting,
                          tau=params.psum_r.tau, backend=b), None
    if name == "h2":
        return heuristic2(instance, params.weighting,
                          tau=params.psum_r.tau, backend=b), None
    if name == "h3":
        return heuristic3(instance, params.h3, backend=b), None
    if name == "h4":
        return heuristic4(instance, backend=b), None
    if name == "lp-relax":
        return lp_relax_solve(instance, backend=b)
    raise ValueError(f"unknown algorithm {name!r}")

ALGORITHM_NAMES = ("psum", "psum-r", "h1", "h2", "h3", "h4", "lp-relax")


@dataclass(frozen=True)
class SuiteSpec:
    """A generator family plus parameters; one instance per seed."""

    name: str
    kind: str                      # mesh | fish | 3dm | tightness
    mesh: MeshParams | None = None
    fish: FishParams | None = None
    dm_k: int = 3
    dm_triples: int = 6
    tightness: TightnessParams | None = None

    def generate(self, seed: int) -> ProblemInstance:
        if self.kind == "mesh":
            return gen_mesh(self.mesh or MeshParams(), seed)
        if self.kind == "fish":
            return gen_fish(self.fish or FishParams(), seed)
        if self.kind == "3dm":
            return gen_3dm(random_triple_set(self.dm_k, self.dm_triples, seed))
        if self.kind == "tightness":
            return gen_tightness(self.tightness or TightnessParams())
        raise ValueError(f"unknown suite kind {self.kind!r}")


BUILTIN_SUITES: dict[str, SuiteSpec] = {
    "mesh-paper": SuiteSpec("mesh-paper", "mesh", mesh=MeshParams()),
    "mesh-small": SuiteSpec(
        "mesh-small", "mesh",
        mesh=MeshParams(rows=3, cols=3, band=(1, 2), n_functions=2,
                        nodes_per_function=2, n_flows=3, chain_length=2,
                        cap_range=(2.0, 5.0), node_cap_range=(1.5, 4.0))),
    "fish-1": SuiteSpec("fish-1", "fish", fish=FishParams(chain_length=1)),
    "fish-2": SuiteSpec("fish-2", "fish", fish=FishParams(chain_length=2)),
    "3dm-k3": SuiteSpec("3dm-k3", "3dm", dm_k=3, dm_triples=6),
    "tightness-node": SuiteSpec("tightness-node", "tightness",
                                tightness=TightnessParams(case="node")),
    "tightness-link": SuiteSpec("tightness-link", "tightness",
                                tightness=TightnessParams(case="link")),
}


def bench_cell(suite: SuiteSpec, seed: int, algorithms: tuple[str, ...],
               params: AlgoParams, measure_time: bool) -> list[BenchRecord]:
    """All records of one seeded instance (generated in-process)."""
    instance = suite.generate(seed)
    instance_id = f"{suite.name}-s{seed}"
    reset_solve_count()
    lp, _ = build_relaxation(instance, with_cuts=False)
    bound_res = solve_lp(lp, backend=params.backend)
    lp_bound = bound_res.objective if bound_res.status == LpStatus.OPTIMAL else math.nan
    records = []
    for name in algorithms:
        reset_solve_count()
        try:
            sol, stages = run_algorithm(name, instance, params)
        except Exception as exc:  # record the failure, keep the harness alive
            records.append(BenchRecord(
                instance_id, seed, name, f"error:{type(exc).__name__}",
                math.nan, lp_bound, math.nan, math.nan, math.nan, None,
                0.0, reset_solve_count(), None))
            continue
        solves = reset_solve_count()
        if sol.status == SolutionStatus.INFEASIBLE:
            records.append(BenchRecord(
                instance_id, seed, name, sol.status.value, math.nan, lp_bound,
                math.nan, math.nan, math.nan, None,
                sol.wall_time_ms if measure_time else 0.0, solves, stages))
            continue
        report = check_feasibility(instance, sol)
        ratio = math.nan
        if math.isfinite(lp_bound) and lp_bound > 0.0:
            ratio = sol.objective / lp_bound
        records.append(BenchRecord(
            instance_id, seed, name, sol.status.value, sol.objective, lp_bound,
            ratio, report.max_link_ratio, report.max_node_ratio, sol.delta,
            sol.wall_time_ms if measure_time else 0.0, solves, stages))
    return records


def _cell_entry(args):
    suite, seed, algorithms, params, measure_time = args
    return bench_cell(suite, seed, algorithms, params, measure_time)


def run_bench(
    suite: SuiteSpec,
    algorithms: tuple[str, ...],
    seeds: tuple[int, ...],
    out_dir: str | None = None,
    params: AlgoParams | None = None,
    workers: int = 1,
    measure_time: bool = True,
) -> list[BenchRecord]:
    params = params or AlgoParams()
    jobs = [(suite, seed, tuple(algorithms), params, measure_time)
            for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(_cell_entry, jobs))
    else:
        per_seed = [_cell_entry(job) for job in jobs]
    records = [rec for cell in per_seed for rec in cell]
    records.sort(key=lambda r: (r.instance_id, r.algorithm))
    if out_dir is not None:
        write_outputs(records, out_dir)
    return records


# -- output files -------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def records_csv(records: list[BenchRecord]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv_row() for r in records]) + "\n"


def ratio_summary_csv(records: list[BenchRecord]) -> str:
    algos = sorted({r.algorithm for r in records})
    lines = ["xi," + ",".join(algos)]
    for xi in XI_GRID:
        counts = []
        for a in algos:
            counts.append(sum(
                1 for r in records
                if r.algorithm == a and math.isfinite(r.ratio)
                and r.ratio <= xi + 1e-12))
        lines.append(f"{xi:.2f}," + ",".join(str(c) for c in counts))
    return "\n".join(lines) + "\n"


def violation_summary_csv(records: list[BenchRecord]) -> str:
    algos = sorted({r.algorithm for r in records})
    lines = ["algorithm,metric,min,median,max"]
    for a in algos:
        for metric, get in (("link", lambda r: r.max_link_viol_ratio),
                            ("node", lambda r: r.max_node_viol_ratio)):
            vals = [get(r) for r in records
                    if r.algorithm == a and math.isfinite(get(r))]
            if not vals:
                lines.append(f"{a},{metric},,,")
                continue
            lines.append(
                f"{a},{metric},{min(vals):.12g},"
                f"{statistics.median(vals):.12g},{max(vals):.12g}")
    return "\n".join(lines) + "\n"


def write_outputs(records: list[BenchRecord], out_dir: str) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, "records.csv"),
        "ratios": os.path.join(out_dir, "summary_ratios.csv"),
        "violations": os.path.join(out_dir, "summary_violations.csv"),
    }
    _atomic_write(paths["records"], records_csv(records))
    _atomic_write(paths["ratios"], ratio_summary_csv(records))
    _atomic_write(paths["violations"], violation_summary_csv(records))
    return paths
