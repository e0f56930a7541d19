"""Problem model: metric instances, clusterings, objectives, switching cost, I/O.

Points are indexed 0..n-1. A clustering is a center set (point indices) plus a
total assignment of the points it covers. The switching cost between a prior
clustering of P1 and a new clustering of P2 counts the P1 points whose assigned
center index changed; center identity is by point index, so two co-located
distinct points are distinct centers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

# Explicit distance tables larger than this are refused; Euclidean inputs fall
# back to on-demand rows beyond it.
DEFAULT_MATERIALIZE_CAP = 4096

_REL_TOL = 1e-9


class InstanceError(ValueError):
    """Raised when an instance or clustering violates a structural invariant."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MetricInstance:
    """A finite metric space given by coordinates or an explicit distance table.

    Instances are immutable after construction and safe to share across
    workers. When `dist` is present it is the authoritative n x n table;
    otherwise distances are Euclidean over `points`, computed on demand.
    """

    n: int
    points: np.ndarray | None = None
    dist: np.ndarray | None = None

    def d(self, i: int, j: int) -> float:
        if self.dist is not None:
            return float(self.dist[i, j])
        diff = self.points[i] - self.points[j]
        return float(np.sqrt(np.dot(diff, diff)))

    def row(self, i: int) -> np.ndarray:
        """Distances from point i to every point."""
        if self.dist is not None:
            return self.dist[i]
        diff = self.points - self.points[i]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def rows(self, idx: Iterable[int]) -> np.ndarray:
        """Distance rows for a set of points, shape (len(idx), n)."""
        idx = list(idx)
        if self.dist is not None:
            return self.dist[idx]
        return np.stack([self.row(i) for i in idx]) if idx else np.empty((0, self.n))

    def matrix(self) -> np.ndarray:
        if self.dist is not None:
            return self.dist
        return self.rows(range(self.n))

    def submatrix(self, idx: Iterable[int]) -> np.ndarray:
        idx = list(idx)
        return self.rows(idx)[:, idx]

    def diameter(self) -> float:
        return float(self.matrix().max(initial=0.0))

    def distinct_distances(self) -> np.ndarray:
        """Sorted distinct pairwise distances, always including 0."""
        vals = np.unique(self.matrix())
        if vals.size == 0 or vals[0] != 0.0:
            vals = np.concatenate([[0.0], vals])
        return vals

    def aspect_ratio(self) -> float:
        m = self.matrix()
        nz = m[m > 0]
        if nz.size == 0:
            return 1.0
        return float(nz.max() / nz.min())


def euclidean_instance(points, materialize_cap: int = DEFAULT_MATERIALIZE_CAP) -> MetricInstance:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise InstanceError("points must be a 2-D array of coordinates")
    n = pts.shape[0]
    inst = MetricInstance(n=n, points=_freeze(pts))
    if n <= materialize_cap:
        # Repeated queries from the DP and LP modules amortize one dense build.
        inst = MetricInstance(n=n, points=inst.points, dist=_freeze(inst.matrix()))
    return inst


def table_instance(dist, validate_triangle: bool = True) -> MetricInstance:
    """Build an instance from an explicit symmetric distance table."""
    m = np.asarray(dist, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InstanceError("distance table must be square")
    n = m.shape[0]
    if not np.all(np.isfinite(m)):
        raise InstanceError("distances must be finite")
    if np.any(m < 0):
        raise InstanceError("distances must be nonnegative")
    if np.any(np.abs(np.diag(m)) > 0):
        raise InstanceError("d(i,i) must be 0")
    if not np.allclose(m, m.T, rtol=_REL_TOL, atol=1e-12):
        raise InstanceError("distance table must be symmetric")
    if validate_triangle:
        check_triangle(m)
    return MetricInstance(n=n, dist=_freeze(m))


def check_triangle(m: np.ndarray) -> None:
    """Verify d(i,k) <= d(i,j) + d(j,k); report the first violating triple."""
    n = m.shape[0]
    slack = 1e-9 * (1.0 + m.max(initial=0.0))
    for j in range(n):
        via = m[:, j][:, None] + m[j][None, :]
        bad = m > via + slack
        if bad.any():
            i, k = np.argwhere(bad)[0]
            raise InstanceError(
                f"triangle inequality violated: d({i},{k})={m[i, k]:g} > "
                f"d({i},{j})+d({j},{k})={via[i, k]:g}"
            )


def metric_closure(m: np.ndarray) -> np.ndarray:
    """Shortest-path closure of a symmetric cost table (triangle repair)."""
    out = np.array(m, dtype=np.float64)
    n = out.shape[0]
    for j in range(n):
        np.minimum(out, out[:, j][:, None] + out[j][None, :], out=out)
    return out


@dataclass(frozen=True)
class Clustering:
    """A center set plus a total assignment of the points it covers."""

    centers: tuple[int, ...]
    assign: dict[int, int]

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(int(c) for c in self.centers))
        object.__setattr__(
            self, "assign", {int(p): int(c) for p, c in self.assign.items()}
        )
        cs = set(self.centers)
        if len(cs) != len(self.centers):
            raise InstanceError("duplicate centers")
        for p, c in self.assign.items():
            if c not in cs:
                raise InstanceError(f"point {p} assigned to non-center {c}")

    @property
    def points(self) -> set[int]:
        return set(self.assign)

    def assign_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(points, centers) as parallel int arrays in sorted point order."""
        pts = np.fromiter(sorted(self.assign), dtype=np.int64, count=len(self.assign))
        cen = np.fromiter((self.assign[int(p)] for p in pts), dtype=np.int64, count=len(pts))
        return pts, cen


@dataclass(frozen=True)
class ConsistentProblem:
    """P1 inside P2, a prior clustering of P1, a switching budget and target k."""

    metric: MetricInstance
    p1: tuple[int, ...]
    prior: Clustering
    budget: int
    k: int

    def __post_init__(self):
        object.__setattr__(self, "p1", tuple(sorted(int(i) for i in self.p1)))
        n = self.metric.n
        if len(set(self.p1)) != len(self.p1):
            raise InstanceError("duplicate indices in p1")
        if self.p1 and (self.p1[0] < 0 or self.p1[-1] >= n):
            raise InstanceError("p1 indices out of range")
        if self.k < 1:
            raise InstanceError("k must be positive")
        if not (0 <= self.budget <= len(self.p1)):
            raise InstanceError("budget S must lie in [0, |P1|]")
        p1set = set(self.p1)
        if set(self.prior.assign) != p1set:
            raise InstanceError("prior must assign exactly the points of P1")
        for c in self.prior.centers:
            if c not in p1set:
                raise InstanceError(f"prior center {c} is not in P1")
        if len(self.prior.centers) > self.k:
            raise InstanceError("prior has more than k centers")

    @property
    def n(self) -> int:
        return self.metric.n

    def p2_points(self) -> range:
        return range(self.metric.n)

    def new_points(self) -> list[int]:
        p1set = set(self.p1)
        return [i for i in range(self.metric.n) if i not in p1set]

    def prior_cost(self) -> float:
        """k-median cost of the prior clustering on P1."""
        return sum(self.metric.d(p, c) for p, c in self.prior.assign.items())


def _require_total(problem: ConsistentProblem, sol: Clustering) -> None:
    missing = [p for p in range(problem.n) if p not in sol.assign]
    if missing:
        raise InstanceError(f"solution leaves point {missing[0]} unassigned")


def cost_kcenter(problem: ConsistentProblem, sol: Clustering) -> float:
    """Max distance from any P2 point to its assigned center."""
    _require_total(problem, sol)
    pts, cen = sol.assign_arrays()
    if pts.size == 0:
        return 0.0
    m = problem.metric
    if m.dist is not None:
        return float(m.dist[pts, cen].max())
    return max(m.d(int(p), int(c)) for p, c in zip(pts, cen))


def cost_kmedian(problem: ConsistentProblem, sol: Clustering) -> float:
    """Sum of distances from P2 points to their assigned centers."""
    _require_total(problem, sol)
    pts, cen = sol.assign_arrays()
    m = problem.metric
    if m.dist is not None:
        return float(m.dist[pts, cen].sum())
    return float(sum(m.d(int(p), int(c)) for p, c in zip(pts, cen)))


def swcost(problem: ConsistentProblem, sol: Clustering) -> int:
    """Number of P1 points whose assigned center differs from the prior's."""
    _require_total(problem, sol)
    mu1 = problem.prior.assign
    return sum(1 for p in problem.p1 if mu1[p] != sol.assign[p])


def nearest_center(metric: MetricInstance, centers: Iterable[int], p: int) -> int:
    """Closest center to p, ties broken toward the lowest point index."""
    best, best_d = -1, math.inf
    for c in sorted(centers):
        dc = metric.d(p, c)
        if dc < best_d - 1e-15:
            best, best_d = c, dc
    return best


def nearest_assignment(metric: MetricInstance, centers: Iterable[int]) -> dict[int, int]:
    """Assign every point to its nearest center (ties -> lowest index)."""
    cen = sorted(centers)
    rows = metric.rows(cen)
    choice = np.argmin(rows, axis=0)
    return {p: cen[int(choice[p])] for p in range(metric.n)}


@dataclass
class SolutionReport:
    """A solved instance: clustering, recomputed objective/switching, run metadata."""

    clustering: Clustering
    objective_value: float
    swcost: int
    wall_time: float
    meta: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "centers": list(self.clustering.centers),
            "assign": {str(p): c for p, c in sorted(self.clustering.assign.items())},
            "objective_value": self.objective_value,
            "swcost": self.swcost,
            "meta": self.meta,
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True)


def make_report(
    problem: ConsistentProblem,
    sol: Clustering,
    objective: str,
    wall_time: float = 0.0,
    meta: dict | None = None,
) -> SolutionReport:
    """Build a report, recomputing objective and swcost from the clustering."""
    if objective == "kcenter":
        value = cost_kcenter(problem, sol)
    elif objective == "kmedian":
        value = cost_kmedian(problem, sol)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    sw = swcost(problem, sol)
    m = dict(meta or {})
    m.setdefault("objective", objective)
    return SolutionReport(sol, value, sw, wall_time, m)


# ---------------------------------------------------------------------------
# Instance serialization
# ---------------------------------------------------------------------------

def problem_to_dict(problem: ConsistentProblem) -> dict:
    doc: dict = {
        "p1": list(problem.p1),
        "prior": {
            "centers": list(problem.prior.centers),
            "assign": {str(p): c for p, c in sorted(problem.prior.assign.items())},
        },
        "S": problem.budget,
        "k": problem.k,
    }
    if problem.metric.points is not None:
        doc["points"] = problem.metric.points.tolist()
    else:
        doc["distances"] = problem.metric.dist.tolist()
    return doc


def save_instance(problem: ConsistentProblem) -> str:
    return json.dumps(problem_to_dict(problem), sort_keys=True)


def _problem_from_dict(doc: Mapping, validate_triangle: bool = True) -> ConsistentProblem:
    if "points" in doc:
        metric = euclidean_instance(doc["points"])
    elif "distances" in doc:
        metric = table_instance(doc["distances"], validate_triangle=validate_triangle)
    else:
        raise InstanceError("instance needs either 'points' or 'distances'")
    prior_doc = doc.get("prior") or {"centers": [], "assign": {}}
    prior = Clustering(
        centers=tuple(prior_doc.get("centers", [])),
        assign={int(p): int(c) for p, c in prior_doc.get("assign", {}).items()},
    )
    return ConsistentProblem(
        metric=metric,
        p1=tuple(doc.get("p1", [])),
        prior=prior,
        budget=int(doc.get("S", 0)),
        k=int(doc["k"]),
    )


def load_instance(source, fmt: str = "json", validate_triangle: bool = True, **csv_kwargs) -> ConsistentProblem:
    """Parse an instance from bytes/str/file-like in JSON or CSV format.

    The CSV variant carries Euclidean coordinates only (one point per row);
    P1/prior default to empty and k/S come from keyword arguments.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if fmt == "json":
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as e:
            raise InstanceError(f"bad JSON instance: {e}") from e
        return _problem_from_dict(doc, validate_triangle=validate_triangle)
    if fmt == "csv":
        rows = [r for r in csv.reader(io.StringIO(data)) if r]
        try:
            pts = [[float(x) for x in r] for r in rows]
        except ValueError as e:
            raise InstanceError(f"bad CSV instance: {e}") from e
        metric = euclidean_instance(pts)
        k = int(csv_kwargs.get("k", 1))
        s = int(csv_kwargs.get("S", 0))
        return ConsistentProblem(
            metric=metric, p1=(), prior=Clustering((), {}), budget=s, k=k
        )
    raise ValueError(f"unknown format {fmt!r}")


def child_rng(seed: int, *stream: int) -> np.random.Generator:
    """Named child generator: one stream per (seed, tag, index...) tuple.

    All randomized stages derive their generator this way, so a run is
    reproducible bit-exactly from its master seed.
    """
    return np.random.default_rng([0x1CC, int(seed)] + [int(s) for s in stream])


def rep_seed(seed: int, index: int) -> int:
    """Child seed for repetition `index`; the documented stream-splitting rule."""
    return int(np.random.SeedSequence([0x1CC, int(seed), int(index)]).generate_state(1)[0])


# Stream tags for child_rng; repetition/run indices are appended after the tag.
STREAM_REDUCE = 1
STREAM_EMBED = 2
STREAM_LP = 3
STREAM_GEN = 4
STREAM_SAMPLE = 5
