"""Experiment driver: instance generation, corpus sweeps, incremental chains.

Generation is deterministic per seed and every generated instance passes the
problem invariants. Sweeps run the solvers over a corpus, attach brute-force
optima when the guards allow, enforce budget compliance as a hard
post-condition, and emit a versioned JSON report plus a plain-text table.
"""

from __future__ import annotations

import json
import math
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kcenter, lpround, oracle, treedp
from .core import (
    STREAM_GEN,
    Clustering,
    ConsistentProblem,
    child_rng,
    cost_kmedian,
    euclidean_instance,
    metric_closure,
    nearest_center,
    problem_to_dict,
    save_instance,
    table_instance,
)
from .embedding import d1_seeding

SCHEMA_VERSION = 1

ALGORITHMS = ("kcenter", "kmedian-dp", "kmedian-lp:k+1", "kmedian-lp:eps")


class SweepError(RuntimeError):
    """A solver row violated its budget post-condition; the sweep is aborted."""


def build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


@dataclass(frozen=True)
class CorpusSpec:
    count: int = 20
    n_range: tuple[int, int] = (4, 12)
    k_range: tuple[int, int] = (1, 3)
    s_policy: str = "fixed:2"  # "fixed:<int>" or "fraction:<float of |P1|>"
    geometry: str = "mixed"  # euclidean-1 | euclidean-2 | random-metric | mixed
    seed: int = 0

    def budget_for(self, n1: int, rng) -> int:
        kind, _, arg = self.s_policy.partition(":")
        if kind == "fixed":
            return min(int(arg), n1)
        if kind == "fraction":
            return min(n1, math.ceil(float(arg) * n1))
        raise ValueError(f"unknown S policy {self.s_policy!r}")


def _random_metric(rng, n):
    raw = rng.uniform(1.0, 10.0, size=(n, n))
    raw = 0.5 * (raw + raw.T)
    np.fill_diagonal(raw, 0.0)
    return table_instance(metric_closure(raw))


def random_problem(spec: CorpusSpec, index: int) -> ConsistentProblem:
    """One seeded instance; the prior is nearest-assignment around |C1| <= k
    sampled centers, perturbed to a random assignment 30% of the time so the
    switching machinery sees non-locally-optimal priors too."""
    rng = child_rng(spec.seed, STREAM_GEN, index)
    n = int(rng.integers(spec.n_range[0], spec.n_range[1] + 1))
    geometry = spec.geometry
    if geometry == "mixed":
        geometry = ("euclidean-2", "euclidean-1", "random-metric")[int(rng.integers(3))]
    if geometry == "random-metric":
        metric = _random_metric(rng, n)
    else:
        dim = 1 if geometry == "euclidean-1" else 2
        metric = euclidean_instance(rng.uniform(0.0, 20.0, size=(n, dim)))
    n1 = int(rng.integers(1, n))
    p1 = tuple(sorted(rng.choice(n, size=n1, replace=False).tolist()))
    k = int(rng.integers(spec.k_range[0], spec.k_range[1] + 1))
    kc = int(rng.integers(1, min(k, n1) + 1))
    c1 = tuple(sorted(rng.choice(p1, size=kc, replace=False).tolist()))
    if rng.random() < 0.3:
        assign = {p: int(c1[rng.integers(len(c1))]) for p in p1}
    else:
        assign = {p: nearest_center(metric, c1, p) for p in p1}
    s = spec.budget_for(n1, rng)
    return ConsistentProblem(metric, p1, Clustering(c1, assign), s, k)


def gen_corpus(spec: CorpusSpec) -> list[ConsistentProblem]:
    return [random_problem(spec, i) for i in range(spec.count)]


def write_corpus(spec: CorpusSpec, outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, prob in enumerate(gen_corpus(spec)):
        path = outdir / f"instance_{i:04d}.json"
        path.write_text(save_instance(prob) + "\n")
        paths.append(path)
    return paths


def intro_instance(
    left: int = 10,
    mid: int = 1000,
    right: int = 10,
    far: int = 1,
    new: int = 1000,
    budget: int = 100,
    k: int = 2,
) -> ConsistentProblem:
    """The motivating 1-D instance: `left` points at -2, `mid` at 0, `right`
    at 2 and `far` at 100 form P1 (prior centers at 0 and at 100); `new`
    points appear at 3. At the default counts |P1| = 1021 and |P2| = 2021."""
    pos = [-2.0] * left + [0.0] * mid + [2.0] * right + [100.0] * far + [3.0] * new
    metric = euclidean_instance([[x] for x in pos])
    n1 = left + mid + right + far
    c_mid = left  # first point sitting at 0
    c_far = left + mid + right  # the point at 100
    assign = {p: c_mid for p in range(left + mid + right)}
    for p in range(left + mid + right, n1):
        assign[p] = c_far
    prior = Clustering((c_mid, c_far), assign)
    return ConsistentProblem(metric, tuple(range(n1)), prior, min(budget, n1), k)


# ---------------------------------------------------------------------------
# Incremental chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    points: np.ndarray  # all points of the final stage
    stages: tuple[int, ...]  # n_1 < n_2 < ... < n_T
    budgets: tuple[int, ...]  # S_t for stages 2..T
    k: int
    seed: int


def gen_chain(seed: int, stages: tuple[int, ...], k: int, budget: int, dim: int = 2) -> Chain:
    if list(stages) != sorted(set(stages)) or stages[0] < k:
        raise ValueError("stages must be strictly increasing and start at >= k")
    rng = child_rng(seed, STREAM_GEN, 999)
    points = rng.uniform(0.0, 20.0, size=(stages[-1], dim))
    return Chain(points, tuple(stages), tuple(budget for _ in stages[1:]), k, seed)


def initial_prior(chain: Chain) -> Clustering:
    """Deterministic seeding + nearest assignment on the first stage."""
    metric = euclidean_instance(chain.points[: chain.stages[0]])
    rng = child_rng(chain.seed, STREAM_GEN, 1000)
    centers = d1_seeding(metric, list(range(metric.n)), chain.k, rng)
    assign = {p: nearest_center(metric, centers, p) for p in range(metric.n)}
    return Clustering(tuple(sorted(centers)), assign)


def run_chain(chain: Chain, algorithm: str = "kmedian-dp", seed: int = 0) -> dict:
    """Feed each stage's solution to the next stage as its prior; audit the
    per-step budgets and the cumulative switching."""
    prior = initial_prior(chain)
    rows = []
    total_switch = 0
    for t in range(1, len(chain.stages)):
        n_prev, n_cur = chain.stages[t - 1], chain.stages[t]
        metric = euclidean_instance(chain.points[:n_cur])
        problem = ConsistentProblem(
            metric, tuple(range(n_prev)), prior, chain.budgets[t - 1], chain.k
        )
        report = _run_algorithm(algorithm, problem, seed)
        if report.swcost > problem.budget:
            raise SweepError(f"chain step {t}: swcost {report.swcost} > {problem.budget}")
        total_switch += report.swcost
        rows.append(
            {
                "step": t,
                "n": n_cur,
                "cost": report.objective_value,
                "swcost": report.swcost,
                "budget": problem.budget,
            }
        )
        prior = report.clustering
    return {
        "schema_version": SCHEMA_VERSION,
        "build": build_id(),
        "algorithm": algorithm,
        "seed": seed,
        "steps": rows,
        "total_swcost": total_switch,
        "budget_sum": sum(chain.budgets),
    }


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _run_algorithm(name: str, problem: ConsistentProblem, seed: int):
    if name == "kcenter":
        return kcenter.solve(problem)
    if name == "kmedian-dp":
        return treedp.solve_pipeline(problem, seed=seed)
    if name == "kmedian-lp:k+1":
        return lpround.round_solution(problem, seed=seed, mode="augment_center")
    if name == "kmedian-lp:eps":
        return lpround.round_solution(problem, seed=seed, mode="augment_switch", eps=0.5)
    raise ValueError(f"unknown algorithm {name!r}")


def _budget_cap(name: str, problem: ConsistentProblem) -> float:
    if name == "kmedian-lp:eps":
        return 1.5 * problem.budget
    return float(problem.budget)


def _percentiles(xs: list[float]) -> dict:
    if not xs:
        return {}
    arr = np.array(xs)
    return {
        "count": len(xs),
        "p50": float(np.percentile(arr, 50)),
        "p90": float(np.percentile(arr, 90)),
        "max": float(arr.max()),
    }


def sweep(
    algorithms: list[str],
    problems: list[ConsistentProblem],
    with_oracle: bool = False,
    seed: int = 0,
    timings: bool = False,
) -> dict:
    """Run each algorithm on each instance; returns the report document."""
    rows = []
    for idx, problem in enumerate(problems):
        opt = {}
        if with_oracle and problem.n <= oracle.MAX_N and problem.k <= oracle.MAX_K:
            opt["kcenter"] = oracle.brute_force(problem, "kcenter").opt_value
            opt["kmedian"] = oracle.brute_force(problem, "kmedian").opt_value
        for name in algorithms:
            row = {"instance": idx, "algorithm": name, "n": problem.n,
                   "k": problem.k, "S": problem.budget}
            t0 = time.perf_counter()
            try:
                report = _run_algorithm(name, problem, seed)
            except Exception as e:  # per-instance failure: record, continue
                row["error"] = f"{type(e).__name__}: {e}"
                rows.append(row)
                continue
            if timings:
                row["time"] = time.perf_counter() - t0
            if report.swcost > _budget_cap(name, problem):
                raise SweepError(
                    f"instance {idx}, {name}: swcost {report.swcost} exceeds its cap"
                )
            row["cost"] = report.objective_value
            row["swcost"] = report.swcost
            objective = "kcenter" if name == "kcenter" else "kmedian"
            if objective in opt:
                row["opt"] = opt[objective]
                if opt[objective] > 0:
                    row["ratio"] = report.objective_value / opt[objective]
                else:
                    row["ratio"] = 1.0 if report.objective_value <= 1e-9 else math.inf
            rows.append(row)
    aggregates = {}
    for name in algorithms:
        ratios = [r["ratio"] for r in rows if r["algorithm"] == name and "ratio" in r]
        costs = [r["cost"] for r in rows if r["algorithm"] == name and "cost" in r]
        errors = sum(1 for r in rows if r["algorithm"] == name and "error" in r)
        aggregates[name] = {
            "ratio": _percentiles(ratios),
            "cost": _percentiles(costs),
            "errors": errors,
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "build": build_id(),
        "seed": seed,
        "algorithms": list(algorithms),
        "rows": rows,
        "aggregates": aggregates,
    }


def sweep_table(doc: dict) -> str:
    """Plain-text rendering of a sweep report."""
    lines = [f"build {doc['build']}  seed {doc['seed']}  schema v{doc['schema_version']}"]
    header = f"{'inst':>4} {'algorithm':<16} {'n':>4} {'k':>2} {'S':>3} {'cost':>12} {'sw':>4} {'ratio':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in doc["rows"]:
        if "error" in r:
            lines.append(f"{r['instance']:>4} {r['algorithm']:<16} {r['n']:>4} "
                         f"{r['k']:>2} {r['S']:>3} {'ERROR: ' + r['error']}")
            continue
        ratio = f"{r['ratio']:.3f}" if "ratio" in r else "-"
        lines.append(f"{r['instance']:>4} {r['algorithm']:<16} {r['n']:>4} {r['k']:>2} "
                     f"{r['S']:>3} {r['cost']:>12.4f} {r['swcost']:>4} {ratio:>8}")
    for name, agg in doc["aggregates"].items():
        if agg["ratio"]:
            lines.append(f"{name}: ratio p50={agg['ratio']['p50']:.3f} "
                         f"p90={agg['ratio']['p90']:.3f} max={agg['ratio']['max']:.3f} "
                         f"({agg['ratio']['count']} rows, {agg['errors']} errors)")
        else:
            lines.append(f"{name}: {agg['cost'].get('count', 0)} rows, {agg['errors']} errors")
    return "\n".join(lines)


def load_corpus_dir(path: str | Path) -> list[ConsistentProblem]:
    from .core import load_instance

    paths = sorted(Path(path).glob("instance_*.json"))
    return [load_instance(p.read_text()) for p in paths]
