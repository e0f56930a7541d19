"""Command-line interface.

Subcommands: gen, sweep, kcenter, kmedian-dp, kmedian-lp, oracle, gap-demo,
embed-dump. Reports are emitted as JSON by default (--table for a summary
where available); identical inputs and seeds produce byte-identical JSON.
Timing fields are included only with --timings, since wall time would break
that reproducibility. The default seed comes from $LCCLUST_SEED.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import harness, kcenter, lpround, oracle, treedp
from .core import load_instance
from .embedding import embed, reduce_points
from .kcenter import NoFeasibleRadius
from .lpround import RoundingError

EXIT_OK = 0
EXIT_INFEASIBLE = 2


def _default_seed() -> int:
    return int(os.environ.get("LCCLUST_SEED", "0"))


def _load(path: str):
    text = Path(path).read_text()
    fmt = "csv" if path.endswith(".csv") else "json"
    return load_instance(text, fmt=fmt)


def _emit_report(report, args) -> None:
    doc = report.to_dict(include_timing=getattr(args, "timings", False))
    print(json.dumps(doc, sort_keys=True))


def cmd_kcenter(args) -> int:
    problem = _load(args.input)
    t0 = time.perf_counter()
    try:
        if args.radius is not None:
            attempt = kcenter.solve_for_radius(problem, args.radius)
            if not attempt.feasible:
                print(json.dumps({"status": "infeasible", "radius": args.radius}))
                return EXIT_INFEASIBLE
            from .core import make_report

            report = make_report(problem, attempt.clustering, "kcenter",
                                 meta={"algorithm": "kcenter", "radius": args.radius})
        else:
            report = kcenter.solve(problem, linear_scan=args.linear_scan)
    except NoFeasibleRadius as e:
        print(json.dumps({"status": "no-feasible-radius", "detail": str(e)}))
        return EXIT_INFEASIBLE
    report.wall_time = time.perf_counter() - t0
    _emit_report(report, args)
    return EXIT_OK


def cmd_kmedian_dp(args) -> int:
    problem = _load(args.input)
    t0 = time.perf_counter()
    report = treedp.solve_pipeline(
        problem,
        seed=args.seed,
        repetitions=args.reps,
        multiplier=args.multiplier,
        leaf_init=args.leaf_init,
        exact=args.exact,
    )
    report.wall_time = time.perf_counter() - t0
    _emit_report(report, args)
    return EXIT_OK


def cmd_kmedian_lp(args) -> int:
    problem = _load(args.input)
    mode = "augment_center" if args.mode == "k-plus-one" else "augment_switch"
    t0 = time.perf_counter()
    try:
        report = lpround.round_solution(
            problem, seed=args.seed, mode=mode, eps=args.eps, samples=args.samples
        )
    except RoundingError as e:
        print(json.dumps({"status": "rounding-failed", "detail": str(e)}))
        return EXIT_INFEASIBLE
    report.wall_time = time.perf_counter() - t0
    _emit_report(report, args)
    return EXIT_OK


def cmd_oracle(args) -> int:
    problem = _load(args.input)
    res = oracle.brute_force(problem, args.objective)
    doc = {
        "objective": args.objective,
        "opt_value": res.opt_value,
        "centers": list(res.opt_clustering.centers),
        "enumerated": res.enumerated,
    }
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def cmd_gap_demo(args) -> int:
    problem, record = lpround.gap_instance(args.k, args.m, args.d)
    if args.solve:
        frac = lpround.solve_lp(problem)
        record["lp_objective"] = frac.objective
        if problem.n <= oracle.MAX_N and problem.k <= oracle.MAX_K:
            record["integral_opt"] = oracle.brute_force(problem, "kmedian").opt_value
            record["gap_ratio"] = record["integral_opt"] / frac.objective
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def cmd_embed_dump(args) -> int:
    problem = _load(args.input)
    weighted = reduce_points(problem, args.seed, multiplier=args.multiplier)
    emb = embed(weighted, problem.metric, args.seed)
    doc = emb.to_dict()
    doc["reps"] = [
        {"point": r.point, "weight": r.weight, "old": r.is_old} for r in weighted.reps
    ]
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = harness.CorpusSpec(
        count=args.count,
        n_range=(args.n_min, args.n_max),
        k_range=(args.k_min, args.k_max),
        s_policy=args.s_policy,
        geometry=args.geometry,
        seed=args.seed,
    )
    paths = harness.write_corpus(spec, args.out)
    print(json.dumps({"written": len(paths), "dir": str(args.out)}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    problems = harness.load_corpus_dir(args.corpus)
    algorithms = args.algorithms.split(",")
    doc = harness.sweep(
        algorithms, problems, with_oracle=args.with_oracle, seed=args.seed,
        timings=args.timings,
    )
    out = harness.sweep_table(doc) if args.table else json.dumps(doc, sort_keys=True)
    if args.out:
        Path(args.out).write_text(out + "\n")
    print(out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lcclust",
        description="Label-consistent k-center and k-median clustering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kcenter", help="two-phase k-center with radius search")
    p.add_argument("--input", required=True)
    p.add_argument("--linear-scan", action="store_true")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_kcenter)

    p = sub.add_parser("kmedian-dp", help="tree-embedding + DP pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--multiplier", type=float, default=2.0)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--leaf-init", choices=("zero", "new-weight"), default="zero")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_kmedian_dp)

    p = sub.add_parser("kmedian-lp", help="LP rounding with resource augmentation")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--mode", choices=("k-plus-one", "eps-switch"), default="k-plus-one")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_kmedian_lp)

    p = sub.add_parser("oracle", help="brute-force optimum (tiny instances)")
    p.add_argument("--input", required=True)
    p.add_argument("--objective", choices=("kcenter", "kmedian"), required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gap-demo", help="integrality-gap instance and analysis")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--d", type=float, default=100.0)
    p.add_argument("--solve", action="store_true")
    p.set_defaults(func=cmd_gap_demo)

    p = sub.add_parser("embed-dump", help="dump a sampled tree embedding as JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--multiplier", type=float, default=2.0)
    p.set_defaults(func=cmd_embed_dump)

    p = sub.add_parser("gen", help="generate a corpus of instances")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--s-policy", default="fixed:2")
    p.add_argument(
        "--geometry",
        choices=("euclidean-1", "euclidean-2", "random-metric", "mixed"),
        default="mixed",
    )
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="run algorithms over a corpus directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--algorithms", default=",".join(harness.ALGORITHMS))
    p.add_argument("--with-oracle", action="store_true")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None)
    p.add_argument("--table", action="store_true")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
