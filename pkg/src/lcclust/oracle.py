"""Exact brute-force solvers for tiny instances; ground truth for every bound."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Clustering, ConsistentProblem, InstanceError
from .embedding import TreeEmbedding, WeightedInstance, tree_distance_matrix

MAX_N = 14
MAX_K = 4
MAX_REPS = 6


@dataclass(frozen=True)
class OracleResult:
    opt_value: float
    opt_clustering: Clustering
    enumerated: int


def budget_assignment(problem: ConsistentProblem, centers: tuple[int, ...]):
    """Budget-optimal assignment to a fixed center set for the k-median objective.

    Points whose old center is closed (and all new points) are forced to the
    nearest center; each forced P1 point consumes one switch. The remaining
    budget buys the largest positive savings among points that could keep
    their old center. Returns (cost, assign, switches) or None when the
    forced switches already exceed the budget.
    """
    m = problem.metric
    cen = sorted(centers)
    rows = m.rows(cen)
    nearest_idx = np.argmin(rows, axis=0)  # ties -> lowest center index
    nearest_d = rows[nearest_idx, np.arange(m.n)]
    mu1 = problem.prior.assign
    cset = set(cen)

    assign: dict[int, int] = {}
    cost = 0.0
    switches = 0
    options: list[tuple[float, int]] = []  # (saving, point)
    for p in range(m.n):
        if p in mu1 and mu1[p] in cset:
            keep_d = m.d(p, mu1[p])
            assign[p] = mu1[p]
            cost += keep_d
            saving = keep_d - float(nearest_d[p])
            if saving > 0:
                options.append((saving, p))
        else:
            assign[p] = cen[int(nearest_idx[p])]
            cost += float(nearest_d[p])
            if p in mu1:
                switches += 1
    if switches > problem.budget:
        return None
    options.sort(key=lambda sp: (-sp[0], sp[1]))
    for saving, p in options[: problem.budget - switches]:
        assign[p] = cen[int(nearest_idx[p])]
        cost -= saving
        switches += 1
    return cost, assign, switches


def exhaustive_budget_assignment(problem: ConsistentProblem, centers: tuple[int, ...]):
    """Reference double-check of budget_assignment by enumerating switch sets."""
    m = problem.metric
    cen = sorted(centers)
    rows = m.rows(cen)
    nearest_idx = np.argmin(rows, axis=0)
    nearest_d = rows[nearest_idx, np.arange(m.n)]
    mu1 = problem.prior.assign
    cset = set(cen)
    keepable = [p for p in problem.p1 if mu1[p] in cset]
    if len(keepable) > 16:
        raise InstanceError("instance too large for exhaustive switch enumeration")
    forced = sum(1 for p in problem.p1 if mu1[p] not in cset)
    if forced > problem.budget:
        return None
    base = sum(
        float(nearest_d[p]) for p in range(m.n) if p not in mu1 or mu1[p] not in cset
    )
    best = math.inf
    for r in range(0, min(len(keepable), problem.budget - forced) + 1):
        for sub in itertools.combinations(keepable, r):
            s = set(sub)
            cost = base
            for p in keepable:
                cost += float(nearest_d[p]) if p in s else m.d(p, mu1[p])
            best = min(best, cost)
    return best


def _kcenter_eval(problem: ConsistentProblem, centers: tuple[int, ...], radii: np.ndarray):
    """Smallest feasible covering radius for a fixed center set, or None."""
    m = problem.metric
    cen = sorted(centers)
    rows = m.rows(cen)
    nearest_idx = np.argmin(rows, axis=0)
    nearest_d = rows[nearest_idx, np.arange(m.n)]
    mu1 = problem.prior.assign
    cset = set(cen)
    keep_d = np.array(
        [m.d(p, mu1[p]) if mu1[p] in cset else math.inf for p in problem.p1]
    )

    def feasible(r: float) -> bool:
        if nearest_d.max(initial=0.0) > r + 1e-12:
            return False
        forced = int(np.sum(keep_d > r + 1e-12))
        return forced <= problem.budget

    lo, hi = 0, len(radii) - 1
    if not feasible(float(radii[hi])):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(float(radii[mid])):
            hi = mid
        else:
            lo = mid + 1
    r = float(radii[lo])
    assign = {}
    for p in range(m.n):
        if p in mu1 and mu1[p] in cset and m.d(p, mu1[p]) <= r + 1e-12:
            assign[p] = mu1[p]
        else:
            assign[p] = cen[int(nearest_idx[p])]
    return r, assign


def brute_force(problem: ConsistentProblem, objective: str) -> OracleResult:
    """Exact optimum by enumerating every center set of size at most k."""
    n = problem.n
    if n > MAX_N or problem.k > MAX_K:
        raise InstanceError(f"oracle guard: needs n <= {MAX_N} and k <= {MAX_K}")
    if objective not in ("kcenter", "kmedian"):
        raise ValueError(f"unknown objective {objective!r}")
    radii = problem.metric.distinct_distances()
    best_val = math.inf
    best: Clustering | None = None
    enumerated = 0
    for size in range(1, problem.k + 1):
        for centers in itertools.combinations(range(n), size):
            enumerated += 1
            if objective == "kmedian":
                res = budget_assignment(problem, centers)
                if res is None:
                    continue
                val, assign, _ = res
            else:
                res = _kcenter_eval(problem, centers, radii)
                if res is None:
                    continue
                val, assign = res
            if val < best_val - 1e-12:
                best_val = val
                best = Clustering(tuple(sorted(centers)), assign)
    if best is None:
        raise InstanceError("no budget-feasible center set exists")
    return OracleResult(best_val, best, enumerated)


def brute_tree(emb: TreeEmbedding, weighted: WeightedInstance, k: int, S: int) -> OracleResult:
    """Exhaustive optimum over rep-center subsets and all rep assignments,
    under tree distances and the switching budget."""
    t = len(weighted.reps)
    if t > MAX_REPS:
        raise InstanceError(f"oracle guard: needs at most {MAX_REPS} reps")
    dt = tree_distance_matrix(emb, t)
    w = np.array([r.weight for r in weighted.reps], dtype=np.int64)
    old = np.array([r.is_old for r in weighted.reps])
    best_val = math.inf
    best = None
    enumerated = 0
    for size in range(1, min(k, t) + 1):
        for centers in itertools.combinations(range(t), size):
            for assign in itertools.product(centers, repeat=t):
                enumerated += 1
                switching = int(sum(w[r] for r in range(t) if old[r] and assign[r] != r))
                if switching > S:
                    continue
                val = float(sum(w[r] * dt[r, assign[r]] for r in range(t)))
                if val < best_val - 1e-12:
                    best_val = val
                    best = Clustering(tuple(centers), dict(enumerate(assign)))
    if best is None:
        raise InstanceError("no budget-feasible tree solution exists")
    return OracleResult(best_val, best, enumerated)
