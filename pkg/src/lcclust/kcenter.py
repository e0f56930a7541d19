"""Two-phase label-consistent k-center: 6-approximation with a radius search.

For a candidate radius R, phase 1 covers points within 2R of old centers and
greedily opens new centers on what remains; phase 2 keeps a max-weight subset
of old centers (marking off 2R-dominated ones) and reassigns the rest. The
radius is searched over the distinct pairwise distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import (
    Clustering,
    ConsistentProblem,
    SolutionReport,
    make_report,
    swcost,
)

_TOL = 1e-9


class NoFeasibleRadius(RuntimeError):
    """No candidate radius admits a budget-feasible k-center solution."""


@dataclass
class RadiusAttempt:
    R: float
    uncovered_centers: list[int]  # new centers opened in phase 1 (k' of them)
    temp_set: list[int]  # temporarily opened old centers, in processing order
    replacements: list[tuple[int, int]] = field(default_factory=list)
    clustering: Clustering | None = None
    feasible: bool = False
    swcost_direct: int | None = None
    swcost_by_weights: int | None = None  # |P1| - sum of kept 2R-truncated weights


def _cover(d: float, r: float) -> bool:
    return d <= r + _TOL * (1.0 + r)


def solve_for_radius(problem: ConsistentProblem, R: float) -> RadiusAttempt:
    """Run both phases for one radius; infeasibility is data, not an error."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    m = problem.metric
    mu1 = problem.prior.assign
    c1 = sorted(problem.prior.centers)
    two_r = 2.0 * R

    # Phase 1: cover within 2R of old centers, then greedy 2R-net on the rest.
    if c1:
        covered = {p for c in c1 for p in range(m.n) if _cover(m.d(c, p), two_r)}
        uncovered = [p for p in range(m.n) if p not in covered]
    else:
        uncovered = list(range(m.n))
    new_centers: list[int] = []
    while uncovered:
        u = uncovered[0]  # lowest index, for determinism
        new_centers.append(u)
        uncovered = [p for p in uncovered if not _cover(m.d(u, p), two_r)]
    attempt = RadiusAttempt(R=R, uncovered_centers=new_centers, temp_set=[])

    # Phase 2: weights count only the prior points still within 2R.
    weights = {
        c: sum(1 for p in problem.p1 if mu1[p] == c and _cover(m.d(c, p), two_r))
        for c in c1
    }
    order = sorted(c1, key=lambda c: (-weights[c], c))
    c2 = set(new_centers)
    marked: set[int] = set()
    for c in order:
        if c in marked:
            continue
        attempt.temp_set.append(c)
        for other in c1:
            if _cover(m.d(c, other), two_r):
                marked.add(other)
    for c in attempt.temp_set:
        ball = [i for i in c1 if _cover(m.d(c, i), R)]
        chosen = min(ball, key=lambda i: (-weights[i], i))
        attempt.replacements.append((c, chosen))
        c2.add(chosen)
    if len(c2) < problem.k:
        for c in order:
            if len(c2) == problem.k:
                break
            c2.add(c)

    centers = tuple(sorted(c2))
    assign: dict[int, int] = {}
    from .core import nearest_center

    for p in range(m.n):
        if p in mu1 and mu1[p] in c2 and _cover(m.d(p, mu1[p]), two_r):
            assign[p] = mu1[p]
        else:
            assign[p] = nearest_center(m, centers, p)
    attempt.clustering = Clustering(centers, assign)
    attempt.swcost_direct = swcost(problem, attempt.clustering)
    kept = [c for c in c1 if c in c2]
    attempt.swcost_by_weights = len(problem.p1) - sum(weights[c] for c in kept)
    # The closest-center fallback can only re-create prior assignments, never
    # break them, so the weight formula upper-bounds the direct count.
    assert attempt.swcost_direct <= attempt.swcost_by_weights
    attempt.feasible = (
        len(new_centers) <= problem.k
        and len(c2) <= problem.k
        and attempt.swcost_direct <= problem.budget
    )
    return attempt


def _search(problem: ConsistentProblem, linear_scan: bool) -> RadiusAttempt:
    radii = problem.metric.distinct_distances()
    if linear_scan:
        for r in radii:
            attempt = solve_for_radius(problem, float(r))
            if attempt.feasible:
                return attempt
        raise NoFeasibleRadius(f"no feasible radius among {len(radii)} candidates")
    lo, hi = 0, len(radii) - 1
    top = solve_for_radius(problem, float(radii[hi]))
    if not top.feasible:
        raise NoFeasibleRadius(f"infeasible even at the maximum radius {radii[hi]:g}")
    best = top
    while lo < hi:
        mid = (lo + hi) // 2
        attempt = solve_for_radius(problem, float(radii[mid]))
        if attempt.feasible:
            best, hi = attempt, mid
        else:
            lo = mid + 1
    return best


def solve(problem: ConsistentProblem, linear_scan: bool = False) -> SolutionReport:
    """Smallest-radius feasible attempt over all candidate radii.

    Binary search by default, exhaustive ascending scan with linear_scan=True
    (the scan is authoritative if the two ever disagree). Raises
    NoFeasibleRadius when every candidate fails.
    """
    attempt = _search(problem, linear_scan)
    meta = {
        "algorithm": "kcenter",
        "radius": attempt.R,
        "phase1_centers": len(attempt.uncovered_centers),
        "linear_scan": linear_scan,
    }
    report = make_report(problem, attempt.clustering, "kcenter", meta=meta)
    if report.swcost > problem.budget:
        raise AssertionError("feasible attempt exceeded the switching budget")
    return report
