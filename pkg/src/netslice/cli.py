"""Command-line entry point.

Subcommands: generate, solve, bench, verify, oracle.  Data goes to files
or stdout; diagnostics go to stderr.  Exit codes: 0 success, 1 when a
required solution is infeasible, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import io as nio
from .bench import (
    ALGORITHM_NAMES,
    BUILTIN_SUITES,
    AlgoParams,
    run_algorithm,
    run_bench,
)
from .generators import (
    FishParams,
    MeshParams,
    TightnessParams,
    gen_3dm,
    gen_fish,
    gen_mesh,
    gen_tightness,
    random_triple_set,
)
from .heuristics import HeuristicIIIConfig, WeightingConfig
from .model import SolutionStatus
from .psum import PsumConfig, PsumRConfig
from .verify import OracleBudgetError, brute_force_optimum, check_feasibility

DEFAULT_OUT_ENV = "NETSLICE_OUT"


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _fail(msg: str, code: int = 2) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _out_path(args, default_name: str) -> str:
    if getattr(args, "out", None):
        return args.out
    base = os.environ.get(DEFAULT_OUT_ENV, ".")
    return os.path.join(base, default_name)


def _add_override_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("algorithm overrides")
    g.add_argument("--sigma1", type=float, default=2.0,
                   help="initial penalty weight (default: 2)")
    g.add_argument("--gamma", type=float, default=1.1,
                   help="penalty growth factor per stage (default: 1.1)")
    g.add_argument("--eps1", type=float, default=1e-3,
                   help="initial smoothing offset (default: 0.001)")
    g.add_argument("--eta", type=float, default=0.7,
                   help="smoothing decay factor per stage (default: 0.7)")
    g.add_argument("--p", type=float, default=0.5,
                   help="penalty exponent in (0,1) (default: 0.5)")
    g.add_argument("--tmax", type=int, default=20,
                   help="max continuation stages (default: 20)")
    g.add_argument("--tmax-r", type=int, default=7,
                   help="continuation stages before rounding (default: 7)")
    g.add_argument("--theta", type=float, default=0.9,
                   help="rounding threshold (default: 0.9)")
    g.add_argument("--tau", type=float, default=None,
                   help="overload weight (default: 10 * links * max rate)")
    g.add_argument("--binarity-tol", type=float, default=1e-4,
                   help="binary-detection tolerance (default: 1e-4)")
    g.add_argument("--no-cuts", action="store_true",
                   help="drop the strengthened-relaxation rows")
    g.add_argument("--w1", type=float, default=1.0,
                   help="hop-distance weight (default: 1)")
    g.add_argument("--w2", type=float, default=None,
                   help="inverse-capacity weight (default: 10 * max node capacity)")
    g.add_argument("--theta1", type=float, default=0.1,
                   help="zero-fixing threshold (default: 0.1)")
    g.add_argument("--theta2", type=float, default=0.9,
                   help="one-fixing threshold (default: 0.9)")
    g.add_argument("--tmax-boot", type=int, default=3,
                   help="bootstrapping rounds (default: 3)")
    g.add_argument("--backend", default="bundled",
                   help="LP backend: bundled or scipy (default: bundled)")


def _params_from_args(args) -> AlgoParams:
    return AlgoParams(
        psum=PsumConfig(sigma1=args.sigma1, gamma=args.gamma, eps1=args.eps1,
                        eta=args.eta, p=args.p, t_max=args.tmax,
                        binarity_tol=args.binarity_tol,
                        use_cuts=not args.no_cuts),
        psum_r=PsumRConfig(t_max=args.tmax_r, theta=args.theta, tau=args.tau),
        weighting=WeightingConfig(w1=args.w1, w2=args.w2),
        h3=HeuristicIIIConfig(t_max=args.tmax_boot, theta1=args.theta1,
                              theta2=args.theta2, theta=args.theta,
                              tau=args.tau),
        backend=args.backend,
    )


# -- subcommands ---------------------------------------------------------------


def _cmd_generate(args) -> int:
    if args.topology == "mesh":
        params = MeshParams(
            rows=args.rows, cols=args.cols, diagonals=not args.no_diagonals,
            band=(args.band[0], args.band[1]), n_functions=args.functions,
            nodes_per_function=args.nodes_per_function, n_flows=args.flows,
            rate=args.rate, cap_range=tuple(args.cap_range),
            node_cap_range=tuple(args.node_cap_range),
            chain_length=args.chain_length)
        instance = gen_mesh(params, args.seed)
        manifest = {"topology": "mesh", "seed": args.seed,
                    "params": params.__dict__}
    elif args.topology == "fish":
        params = FishParams(chain_length=args.chain_length,
                            n_flows=args.flows)
        instance = gen_fish(params, args.seed)
        manifest = {"topology": "fish", "seed": args.seed,
                    "params": {**params.__dict__,
                               "layer_sizes": list(params.layer_sizes),
                               "function_layers": list(params.function_layers),
                               "rate_range": list(params.rate_range),
                               "cap_master_range": list(params.cap_master_range)}}
    elif args.topology == "3dm":
        triples = random_triple_set(args.k, args.triples, args.seed)
        instance = gen_3dm(triples, rate=args.rate)
        manifest = {"topology": "3dm", "seed": args.seed, "k": args.k,
                    "triples": [list(t) for t in triples.triples]}
    elif args.topology == "tightness":
        params = TightnessParams(case=args.case, eps=args.eps)
        instance = gen_tightness(params)
        manifest = {"topology": "tightness", "case": args.case, "eps": args.eps}
    else:  # pragma: no cover - argparse restricts choices
        return _fail(f"unknown topology {args.topology!r}")
    manifest.update({
        "nodes": instance.n_nodes,
        "links": instance.n_links,
        "flows": len(instance.flows),
    })
    path = _out_path(args, f"{args.topology}-s{args.seed}.json")
    _atomic_write_bytes(path, nio.write_instance(instance))
    _atomic_write_bytes(path + ".manifest.json",
                        (json.dumps(manifest, indent=2, sort_keys=True,
                                    default=str) + "\n").encode())
    _log(f"wrote {path} ({instance.n_nodes} nodes, {instance.n_links} links, "
         f"{len(instance.flows)} flows)")
    return 0


def _cmd_solve(args) -> int:
    try:
        instance = nio.read_instance_file(args.instance)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    params = _params_from_args(args)
    sol, _stages = run_algorithm(args.algorithm, instance, params)
    if args.zero_timings:
        from dataclasses import replace
        sol = replace(sol, wall_time_ms=0.0)
    violations = None
    if sol.status != SolutionStatus.INFEASIBLE:
        violations = check_feasibility(instance, sol).as_dict()
    path = _out_path(args, "solution.json")
    _atomic_write_bytes(path, nio.write_solution(instance, sol, violations))
    _log(f"{args.algorithm}: status={sol.status.value} "
         f"objective={sol.objective:.6g}")
    if sol.status == SolutionStatus.INFEASIBLE:
        return 1
    return 0


def _cmd_bench(args) -> int:
    if args.suite not in BUILTIN_SUITES:
        return _fail(f"unknown suite {args.suite!r}; "
                     f"available: {', '.join(sorted(BUILTIN_SUITES))}")
    algorithms = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
    for a in algorithms:
        if a not in ALGORITHM_NAMES:
            return _fail(f"unknown algorithm {a!r}; "
                         f"available: {', '.join(ALGORITHM_NAMES)}")
    seeds = _parse_seeds(args.seeds)
    if seeds is None:
        return _fail(f"cannot parse seed spec {args.seeds!r}")
    out_dir = args.out or os.path.join(
        os.environ.get(DEFAULT_OUT_ENV, "."), f"bench-{args.suite}")
    records = run_bench(
        BUILTIN_SUITES[args.suite], algorithms, seeds, out_dir=out_dir,
        params=_params_from_args(args), workers=args.workers,
        measure_time=not args.no_timings)
    _log(f"wrote {len(records)} records to {out_dir}")
    return 0


def _parse_seeds(spec: str) -> tuple[int, ...] | None:
    try:
        if ":" in spec:
            lo, hi = spec.split(":", 1)
            return tuple(range(int(lo), int(hi)))
        return tuple(int(s) for s in spec.split(",") if s.strip())
    except ValueError:
        return None


def _cmd_verify(args) -> int:
    try:
        instance = nio.read_instance_file(args.instance)
        with open(args.solution, "rb") as fh:
            solution = nio.read_solution(instance, fh)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    report = check_feasibility(instance, solution, tol=args.tol)
    print(f"status={solution.status.value}")
    print(f"objective={solution.objective:.12g}")
    print(f"objective_consistent={solution.objective_consistent()}")
    for key, value in report.as_dict().items():
        if value is None:
            print(f"{key}=")
        elif isinstance(value, float):
            print(f"{key}={value:.12g}")
        else:
            print(f"{key}={value}")
    print(f"clean={report.clean(args.tol)}")
    return 0


def _cmd_oracle(args) -> int:
    try:
        instance = nio.read_instance_file(args.instance)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    try:
        objective, placement = brute_force_optimum(
            instance, max_placements=args.budget, backend=args.backend)
    except OracleBudgetError as exc:
        return _fail(str(exc))
    if objective is None:
        print("infeasible")
        return 0
    print(f"optimum={objective:.12g}")
    for (k, s), i in sorted(placement.assignment.items()):
        print(f"place flow={instance.flows[k].id} position={s} "
              f"node={instance.node_ids[i]}")
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netslice",
        description="Joint service-chain placement and flow routing toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded instance file")
    g.add_argument("--topology", choices=("mesh", "fish", "3dm", "tightness"),
                   required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help=f"output path (default: ${DEFAULT_OUT_ENV} dir)")
    g.add_argument("--rows", type=int, default=10)
    g.add_argument("--cols", type=int, default=10)
    g.add_argument("--no-diagonals", action="store_true")
    g.add_argument("--band", type=int, nargs=2, default=(3, 7),
                   help="half-open column range hosting functions")
    g.add_argument("--functions", type=int, default=5)
    g.add_argument("--nodes-per-function", type=int, default=10)
    g.add_argument("--flows", type=int, default=30)
    g.add_argument("--rate", type=float, default=1.0)
    g.add_argument("--cap-range", type=float, nargs=2, default=(0.5, 5.5))
    g.add_argument("--node-cap-range", type=float, nargs=2, default=(0.5, 8.0))
    g.add_argument("--chain-length", type=int, default=2)
    g.add_argument("--k", type=int, default=3, help="family size (3dm)")
    g.add_argument("--triples", type=int, default=6, help="triple count (3dm)")
    g.add_argument("--case", choices=("node", "link"), default="node")
    g.add_argument("--eps", type=float, default=0.25)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="run one algorithm on an instance file")
    s.add_argument("--algorithm", choices=ALGORITHM_NAMES, required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--out", help="solution path")
    s.add_argument("--zero-timings", action="store_true",
                   help="write wall_time_ms=0 for reproducible bytes")
    _add_override_flags(s)
    s.set_defaults(func=_cmd_solve)

    b = sub.add_parser("bench", help="run a seeded suite and write CSVs")
    b.add_argument("--suite", required=True,
                   help=f"one of: {', '.join(sorted(BUILTIN_SUITES))}")
    b.add_argument("--seeds", default="0:10",
                   help="range lo:hi or comma list (default: 0:10)")
    b.add_argument("--algorithms", default="psum,psum-r,h1,h2,h3,h4",
                   help="comma-separated algorithm names")
    b.add_argument("--out", help="output directory")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-timings", action="store_true",
                   help="write zero wall times for byte-identical reruns")
    _add_override_flags(b)
    b.set_defaults(func=_cmd_bench)

    v = sub.add_parser("verify", help="recompute violations of a solution file")
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", required=True)
    v.add_argument("--tol", type=float, default=1e-6)
    v.set_defaults(func=_cmd_verify)

    o = sub.add_parser("oracle", help="exhaustive placement optimum")
    o.add_argument("--instance", required=True)
    o.add_argument("--budget", type=int, default=20000,
                   help="max placement count (default: 20000)")
    o.add_argument("--backend", default="bundled")
    o.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        return _fail(str(exc))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
