"""LP relaxation and dependent rounding for label-consistent k-median.

The relaxation opens fractional centers under the k-cap and a fractional
switching budget. Rounding filters clients into well-separated representatives,
packs nearby fractional facility mass into disjoint bundles, matches bundles
greedily, and then samples an integral center set from a polytope whose
constraints form two laminar families (bundle/pair/global caps and prefix
floors over the old centers sorted by weight). Extreme points of that polytope
are integral, so a face-walk decomposition of the LP point yields a
distribution over center sets with exact marginals, at most one center per
bundle, at least one per matched pair, and prefix-capped closures of heavy old
centers. The prefix floors convert expected switching control into the
worst-case guarantees of the two resource-augmentation modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .core import (
    STREAM_LP,
    STREAM_SAMPLE,
    Clustering,
    ConsistentProblem,
    SolutionReport,
    child_rng,
    cost_kmedian,
    make_report,
    metric_closure,
    swcost,
    table_instance,
)
from .simplex import solve_lp as simplex_solve

_TOL = 1e-7


class RoundingError(RuntimeError):
    pass


def prior_weights(problem: ConsistentProblem) -> dict[int, int]:
    """w_i = size of old center i's prior cluster."""
    w = {c: 0 for c in problem.prior.centers}
    for _, c in problem.prior.assign.items():
        w[c] += 1
    return w


def weight_order(problem: ConsistentProblem) -> list[int]:
    """Old centers by non-increasing weight, ties by index."""
    w = prior_weights(problem)
    return sorted(problem.prior.centers, key=lambda c: (-w[c], c))


@dataclass(frozen=True)
class FractionalSolution:
    y: np.ndarray  # (n,)
    x: np.ndarray  # (n, n), x[i, j] = assignment of client j to facility i
    objective: float

    def d_av(self, problem: ConsistentProblem) -> np.ndarray:
        return np.einsum("ij,ij->j", self.x, problem.metric.matrix())

    def check_feasible(self, problem: ConsistentProblem, tol: float = 1e-6) -> None:
        n = problem.n
        assert np.all(self.x >= -tol) and np.all(self.y >= -tol)
        assert np.all(self.y <= 1 + tol)
        assert np.allclose(self.x.sum(axis=0), 1.0, atol=tol)
        assert np.all(self.x <= self.y[:, None] + tol)
        assert self.y.sum() <= problem.k + tol
        w = prior_weights(problem)
        switch = sum(w[c] * (1.0 - self.y[c]) for c in problem.prior.centers)
        assert switch <= problem.budget + tol * (1 + problem.n)


def solve_lp(
    problem: ConsistentProblem,
    fix_zero: tuple[int, ...] = (),
    fix_one: tuple[int, ...] = (),
) -> FractionalSolution:
    """Optimal fractional solution via the built-in dense simplex.

    fix_zero / fix_one pin facility openings for the heavy-center guessing
    mode. The objective is a lower bound on the integral optimum.
    """
    n = problem.n
    dist = problem.metric.matrix()
    nvars = n + n * n  # [y_0..y_{n-1}, x_00, x_01, ..] with x_ij at n + i*n + j
    c = np.zeros(nvars)
    c[n:] = dist.reshape(-1)

    a_eq = np.zeros((n, nvars))
    for j in range(n):
        a_eq[j, n + j::n] = 1.0  # sum_i x_ij = 1
    b_eq = np.ones(n)

    n_ub = n * n + 2 + n + len(fix_zero) + len(fix_one)
    a_ub = np.zeros((n_ub, nvars))
    b_ub = np.zeros(n_ub)
    r = 0
    for i in range(n):
        for j in range(n):
            a_ub[r, n + i * n + j] = 1.0
            a_ub[r, i] = -1.0
            r += 1
    a_ub[r, :n] = 1.0
    b_ub[r] = problem.k
    r += 1
    w = prior_weights(problem)
    for cidx in problem.prior.centers:
        a_ub[r, cidx] = -w[cidx]
    b_ub[r] = problem.budget - sum(w.values())
    r += 1
    for i in range(n):
        a_ub[r, i] = 1.0
        b_ub[r] = 1.0
        r += 1
    for i in fix_zero:
        a_ub[r, i] = 1.0
        b_ub[r] = 0.0
        r += 1
    for i in fix_one:
        a_ub[r, i] = -1.0
        b_ub[r] = -1.0
        r += 1

    sol, obj = simplex_solve(c, a_ub, b_ub, a_eq, b_eq)
    frac = FractionalSolution(y=sol[:n].copy(), x=sol[n:].reshape(n, n).copy(), objective=obj)
    frac.check_feasible(problem)
    return frac


# ---------------------------------------------------------------------------
# Filtering, bundles, matching
# ---------------------------------------------------------------------------


@dataclass
class Copy:
    facility: int
    share: float
    in_bundle: int = -1  # filtered client owning the bundle, or -1


@dataclass
class BundleStructure:
    filtered: list[int]
    r_half: dict[int, float]
    copies: list[Copy]
    bundles: dict[int, list[int]]  # filtered client -> copy ids
    matching: list[tuple[int, int]]
    vol: dict[int, float]
    d_av: np.ndarray

    def copy_ids_of(self, facility: int) -> list[int]:
        return [ci for ci, cp in enumerate(self.copies) if cp.facility == facility]


def _pack_bundle(problem, claimed: list[int], y: np.ndarray, j: int) -> list[tuple[int, float]]:
    """Pick (facility, share) pairs for one bundle, volume = min(1, claimed).

    Old centers are atomic (never split); other facilities may be split. The
    atom subset is chosen exhaustively to maximize the packed volume under the
    cap, preferring closer atoms on ties, then the splittable mass fills the
    rest closest-first.
    """
    m = problem.metric
    c1 = set(problem.prior.centers)
    order = sorted(claimed, key=lambda i: (m.d(i, j), i))
    atoms = [i for i in order if i in c1]
    fluid = [i for i in order if i not in c1]
    fluid_total = float(sum(y[i] for i in fluid))
    if len(atoms) > 16:
        raise RoundingError("too many old-center atoms in one bundle")
    best_subset: tuple[int, ...] = ()
    best_vol = min(1.0, fluid_total)
    for rsize in range(1, len(atoms) + 1):
        for subset in combinations(range(len(atoms)), rsize):
            asum = float(sum(y[atoms[t]] for t in subset))
            if asum > 1.0 + _TOL:
                continue
            vol = asum + min(fluid_total, 1.0 - asum)
            if vol > best_vol + _TOL:
                best_vol = vol
                best_subset = subset
    picked = []
    room = 1.0
    for t in best_subset:
        picked.append((atoms[t], float(y[atoms[t]])))
        room -= float(y[atoms[t]])
    for i in fluid:
        if room <= _TOL:
            break
        take = min(float(y[i]), room)
        picked.append((i, take))
        room -= take
    return picked


def filter_and_bundle(problem: ConsistentProblem, frac: FractionalSolution) -> BundleStructure:
    """Charikar-Li style filtering, disjoint bundles, and a greedy matching."""
    m = problem.metric
    n = problem.n
    d_av = frac.d_av(problem)

    filtered: list[int] = []
    for j in sorted(range(n), key=lambda j: (d_av[j], j)):
        if all(m.d(j, jp) >= 4.0 * d_av[j] - _TOL for jp in filtered):
            filtered.append(j)
    filtered.sort()

    diameter = m.diameter()
    r_half: dict[int, float] = {}
    for j in filtered:
        others = [m.d(j, jp) for jp in filtered if jp != j]
        r_half[j] = 0.5 * min(others) if others else 2.0 * diameter

    # claim each positive-mass facility for its nearest filtered client
    claims: dict[int, list[int]] = {j: [] for j in filtered}
    for i in range(n):
        if frac.y[i] <= _TOL:
            continue
        jstar = min(filtered, key=lambda j: (m.d(i, j), j))
        if m.d(i, jstar) <= r_half[jstar] + _TOL:
            claims[jstar].append(i)

    copies: list[Copy] = []
    bundles: dict[int, list[int]] = {}
    vol: dict[int, float] = {}
    in_bundle_share: dict[int, float] = {}
    for j in filtered:
        picked = _pack_bundle(problem, claims[j], frac.y, j)
        ids = []
        for fac, share in picked:
            if share <= _TOL:
                continue
            ids.append(len(copies))
            copies.append(Copy(facility=fac, share=share, in_bundle=j))
            in_bundle_share[fac] = in_bundle_share.get(fac, 0.0) + share
        bundles[j] = ids
        vol[j] = float(sum(copies[ci].share for ci in ids))

    # leftover shares live outside every bundle; old centers are never split,
    # so their leftover is either everything or nothing
    c1 = set(problem.prior.centers)
    for i in range(n):
        used = in_bundle_share.get(i, 0.0)
        left = float(frac.y[i]) - used
        if i in c1:
            if used == 0.0:
                copies.append(Copy(facility=i, share=float(frac.y[i]), in_bundle=-1))
        elif left > _TOL:
            copies.append(Copy(facility=i, share=left, in_bundle=-1))

    unmatched = list(filtered)
    matching: list[tuple[int, int]] = []
    while len(unmatched) >= 2:
        best = None
        for a in range(len(unmatched)):
            for b in range(a + 1, len(unmatched)):
                key = (m.d(unmatched[a], unmatched[b]), unmatched[a], unmatched[b])
                if best is None or key < best[0]:
                    best = (key, a, b)
        _, a, b = best
        matching.append((unmatched[a], unmatched[b]))
        unmatched = [u for t, u in enumerate(unmatched) if t not in (a, b)]

    return BundleStructure(filtered, r_half, copies, bundles, matching, vol, d_av)


# ---------------------------------------------------------------------------
# Laminar polytope and face-walk decomposition
# ---------------------------------------------------------------------------


@dataclass
class LaminarPolytope:
    """Rows (a, b, sense) over facility copies; sense is 'ub' (a.z <= b) or
    'lb' (a.z >= b). The ub family (bundles, pair unions, global cap) and the
    lb family (weight-ordered prefixes of the old centers) are each laminar
    with integral right-hand sides, so every extreme point is integral."""

    a: np.ndarray
    b: np.ndarray
    sense: list[str]
    names: list[str]
    point: np.ndarray  # the LP restriction this polytope must contain


def int_ceil(x: float, tol: float = 1e-7) -> int:
    return math.ceil(x - tol)


def build_polytope(problem: ConsistentProblem, frac: FractionalSolution, bundles: BundleStructure) -> LaminarPolytope:
    copies = bundles.copies
    g = len(copies)
    point = np.array([cp.share for cp in copies])
    rows = []
    rhs = []
    sense = []
    names = []

    row = np.ones(g)
    rows.append(row)
    rhs.append(float(problem.k))
    sense.append("ub")
    names.append("global<=k")

    for j in bundles.filtered:
        ids = bundles.bundles[j]
        if not ids:
            continue
        row = np.zeros(g)
        row[ids] = 1.0
        rows.append(row)
        rhs.append(1.0)
        sense.append("ub")
        names.append(f"bundle[{j}]<=1")

    for j, jp in bundles.matching:
        ids = bundles.bundles[j] + bundles.bundles[jp]
        row = np.zeros(g)
        row[ids] = 1.0
        rows.append(row)
        rhs.append(1.0)
        sense.append("lb")
        names.append(f"pair[{j},{jp}]>=1")

    order = weight_order(problem)
    c1 = set(problem.prior.centers)
    copy_of: dict[int, int] = {}
    for ci, cp in enumerate(copies):
        if cp.facility in c1:
            assert cp.facility not in copy_of, "old center was split across copies"
            copy_of[cp.facility] = ci
    acc = 0.0
    row_acc = np.zeros(g)
    for ell, cidx in enumerate(order, start=1):
        acc += 1.0 - float(frac.y[cidx])
        row_acc = row_acc.copy()
        row_acc[copy_of[cidx]] = 1.0
        rows.append(row_acc)
        rhs.append(float(ell - int_ceil(acc)))
        sense.append("lb")
        names.append(f"prefix[{ell}]>={ell - int_ceil(acc)}")

    return LaminarPolytope(np.array(rows) if rows else np.zeros((0, g)), np.array(rhs), sense, names, point)


def _feasible(poly: LaminarPolytope, z: np.ndarray, tol: float = 1e-6) -> bool:
    if np.any(z < -tol) or np.any(z > 1 + tol):
        return False
    vals = poly.a @ z
    for v, b, s in zip(vals, poly.b, poly.sense):
        if s == "ub" and v > b + tol:
            return False
        if s == "lb" and v < b - tol:
            return False
    return True


def _vertex_on_face(poly: LaminarPolytope, tight_rows, tight_lo, tight_hi, rng) -> np.ndarray:
    """Integral vertex of the face by simplex with a fresh random objective."""
    g = poly.point.shape[0]
    c = rng.standard_normal(g)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for idx in range(poly.a.shape[0]):
        row, b, s = poly.a[idx], poly.b[idx], poly.sense[idx]
        if idx in tight_rows:
            a_eq.append(row)
            b_eq.append(b)
        elif s == "ub":
            a_ub.append(row)
            b_ub.append(b)
        else:
            a_ub.append(-row)
            b_ub.append(-b)
    eye = np.eye(g)
    for i in range(g):
        if i in tight_hi:
            a_eq.append(eye[i])
            b_eq.append(1.0)
        elif i in tight_lo:
            a_eq.append(eye[i])
            b_eq.append(0.0)
        else:
            a_ub.append(eye[i])
            b_ub.append(1.0)
    v, _ = simplex_solve(c, np.array(a_ub), np.array(b_ub), np.array(a_eq), np.array(b_eq))
    if np.max(np.abs(v - np.round(v))) > 1e-6:
        raise RoundingError("non-integral vertex: laminar structure violated")
    v = np.round(v)
    if not _feasible(poly, v):
        raise RoundingError("vertex escaped the polytope")
    return v


def decompose(poly: LaminarPolytope, seed: int) -> list[tuple[np.ndarray, float]]:
    """Write the LP point as a convex combination of integral vertices.

    Face walk: freeze constraints tight at the current point, pull an integral
    vertex of that face, then step away from it until a new constraint goes
    tight. Each step tightens at least one constraint, so the walk ends after
    at most dim+1 vertices.
    """
    rng = child_rng(seed, STREAM_LP)
    z = poly.point.copy()
    g = z.shape[0]
    out: list[tuple[np.ndarray, float]] = []
    remaining = 1.0
    for _ in range(g + poly.a.shape[0] + 2):
        vals = poly.a @ z
        tight_rows = {i for i in range(poly.a.shape[0]) if abs(vals[i] - poly.b[i]) <= 1e-8 * (1 + abs(poly.b[i]))}
        tight_lo = {i for i in range(g) if z[i] <= 1e-8}
        tight_hi = {i for i in range(g) if z[i] >= 1 - 1e-8}
        v = _vertex_on_face(poly, tight_rows, tight_lo, tight_hi, rng)
        if np.max(np.abs(z - v)) <= 1e-9:
            out.append((v, remaining))
            remaining = 0.0
            break
        d = z - v
        theta = math.inf
        for i in range(poly.a.shape[0]):
            if i in tight_rows:
                continue
            slope = float(poly.a[i] @ d)
            gap = float(poly.b[i] - vals[i])
            if poly.sense[i] == "ub" and slope > 1e-12:
                theta = min(theta, gap / slope)
            elif poly.sense[i] == "lb" and slope < -1e-12:
                theta = min(theta, gap / slope)
        for i in range(g):
            if d[i] > 1e-12 and i not in tight_hi:
                theta = min(theta, (1.0 - z[i]) / d[i])
            elif d[i] < -1e-12 and i not in tight_lo:
                theta = min(theta, -z[i] / d[i])
        if not math.isfinite(theta) or theta <= 0:
            raise RoundingError("face walk stalled")
        lam = theta / (1.0 + theta)
        out.append((v, remaining * lam))
        z = z + theta * d
        remaining *= 1.0 - lam
        if remaining <= 1e-12:
            break
    else:
        raise RoundingError("face walk did not converge")
    if remaining > 1e-9:
        raise RoundingError("face walk left unassigned mass")
    total = sum(lm for _, lm in out)
    assert abs(total - 1.0) <= 1e-9
    recon = sum(lm * v for v, lm in out)
    assert np.max(np.abs(recon - poly.point)) <= 1e-6
    return out


class CenterSampler:
    """Decomposes once, then samples center sets with the decomposition's
    exact probabilities. The trace of (vertex, weight) pairs is kept for audit."""

    def __init__(self, problem: ConsistentProblem, frac: FractionalSolution,
                 bundles: BundleStructure, seed: int):
        self.problem = problem
        self.frac = frac
        self.bundles = bundles
        self.poly = build_polytope(problem, frac, bundles)
        self.trace = decompose(self.poly, seed)
        self.seed = seed
        self._weights = np.array([lm for _, lm in self.trace])
        self._weights /= self._weights.sum()

    def centers_of_vertex(self, v: np.ndarray) -> tuple[int, ...]:
        opened = set()
        for ci, cp in enumerate(self.bundles.copies):
            if v[ci] >= 0.5:
                opened.add(cp.facility)
        return tuple(sorted(opened))

    def sample(self, index: int) -> tuple[int, ...]:
        rng = child_rng(self.seed, STREAM_SAMPLE, index)
        m = int(rng.choice(len(self.trace), p=self._weights))
        return self.centers_of_vertex(self.trace[m][0])

    def facility_marginal(self, facility: int) -> float:
        p = 0.0
        for v, lm in self.trace:
            if any(v[ci] >= 0.5 for ci in self.bundles.copy_ids_of(facility)):
                p += lm
        return p


def sample_centers(problem: ConsistentProblem, frac: FractionalSolution,
                   bundles: BundleStructure, seed: int):
    """One sampled center set plus the decomposition trace."""
    sampler = CenterSampler(problem, frac, bundles, seed)
    return sampler.sample(0), sampler.trace


def check_sample_properties(problem: ConsistentProblem, frac: FractionalSolution,
                            bundles: BundleStructure, centers: tuple[int, ...]) -> list[str]:
    """Violated structural properties (1,3,4,5) of one sampled center set."""
    bad = []
    cset = set(centers)
    if len(centers) > problem.k:
        bad.append("more than k centers")
    for j in bundles.filtered:
        facs = {bundles.copies[ci].facility for ci in bundles.bundles[j]}
        if len(facs & cset) > 1:
            bad.append(f"bundle of {j} holds {len(facs & cset)} centers")
    for j, jp in bundles.matching:
        facs = {bundles.copies[ci].facility for ci in bundles.bundles[j] + bundles.bundles[jp]}
        if len(facs & cset) < 1:
            bad.append(f"matched pair ({j},{jp}) got no center")
    order = weight_order(problem)
    acc = 0.0
    closed = 0
    for ell, cidx in enumerate(order, start=1):
        acc += 1.0 - float(frac.y[cidx])
        if cidx not in cset:
            closed += 1
        if closed > int_ceil(acc):
            bad.append(f"prefix {ell}: {closed} closures > ceil({acc:.6f})")
    return bad


# ---------------------------------------------------------------------------
# Rounding drivers
# ---------------------------------------------------------------------------


def _assignment(problem: ConsistentProblem, centers: tuple[int, ...]) -> Clustering:
    """Old points keep their center whenever it is open; everyone else goes to
    the closest center (ties toward the lowest index)."""
    m = problem.metric
    cen = sorted(centers)
    rows = m.rows(cen)
    choice = np.argmin(rows, axis=0)
    mu1 = problem.prior.assign
    assign = {}
    for p in range(problem.n):
        if p in mu1 and mu1[p] in set(cen):
            assign[p] = mu1[p]
        else:
            assign[p] = cen[int(choice[p])]
    return Clustering(tuple(cen), assign)


def repair_center(problem: ConsistentProblem, frac: FractionalSolution,
                  centers: tuple[int, ...]):
    """First old center (by non-increasing weight) that the sample closed while
    the LP kept it strictly fractional; opening it restores swcost <= S."""
    for cidx in weight_order(problem):
        if cidx not in centers and _TOL < frac.y[cidx] < 1 - _TOL:
            return cidx
    return None


def round_solution(problem: ConsistentProblem, seed: int, mode: str = "augment_center",
                   eps: float = 0.5, samples: int = 1) -> SolutionReport:
    """LP rounding with resource augmentation.

    augment_center: up to k+1 centers, switching cost <= S always.
    augment_switch: k centers, switching cost <= (1+eps)S, by guessing which
    heavy old centers (w_i >= eps*S) the optimum closes and re-solving with
    those openings pinned. With samples > 1 the cheapest of several draws
    from the same decomposition is kept.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if mode == "augment_center":
        frac = solve_lp(problem)
        bundles = filter_and_bundle(problem, frac)
        sampler = CenterSampler(problem, frac, bundles, seed)
        best = None
        for i in range(samples):
            centers = sampler.sample(i)
            extra = repair_center(problem, frac, centers)
            if extra is not None:
                centers = tuple(sorted(set(centers) | {extra}))
            sol = _assignment(problem, centers)
            cost = cost_kmedian(problem, sol)
            if best is None or cost < best[0] - 1e-12:
                best = (cost, sol, extra)
        cost, sol, extra = best
        report = make_report(problem, sol, "kmedian", meta={
            "algorithm": "kmedian-lp",
            "mode": "k-plus-one",
            "seed": int(seed),
            "samples": int(samples),
            "lp_objective": float(frac.objective),
            "extra_center": extra if extra is None else int(extra),
            "vertices": len(sampler.trace),
        })
        if report.swcost > problem.budget:
            raise AssertionError("augmented rounding exceeded the switching budget")
        if len(sol.centers) > problem.k + 1:
            raise AssertionError("augmented rounding opened more than k+1 centers")
        return report

    if mode != "augment_switch":
        raise ValueError(f"unknown mode {mode!r}")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    w = prior_weights(problem)
    heavy = [c for c in weight_order(problem) if w[c] >= eps * problem.budget]
    best = None
    guesses = 0
    for rsize in range(0, len(heavy) + 1):
        for closed in combinations(heavy, rsize):
            if sum(w[c] for c in closed) > problem.budget:
                continue
            kept = tuple(c for c in heavy if c not in closed)
            if len(kept) > problem.k:
                continue
            guesses += 1
            try:
                frac = solve_lp(problem, fix_zero=tuple(closed), fix_one=kept)
            except Exception:
                continue
            bundles = filter_and_bundle(problem, frac)
            sampler = CenterSampler(problem, frac, bundles, seed)
            for i in range(samples):
                centers = sampler.sample(i)
                sol = _assignment(problem, centers)
                sw = swcost(problem, sol)
                if sw > (1 + eps) * problem.budget:
                    continue
                cost = cost_kmedian(problem, sol)
                row = (cost, sorted(closed), sol, frac.objective)
                if best is None or row[0] < best[0] - 1e-12:
                    best = row
    if best is None:
        raise RoundingError("every heavy-center guess was infeasible")
    cost, closed, sol, lp_obj = best
    report = make_report(problem, sol, "kmedian", meta={
        "algorithm": "kmedian-lp",
        "mode": "eps-switch",
        "eps": float(eps),
        "seed": int(seed),
        "samples": int(samples),
        "guesses": int(guesses),
        "closed_heavy": [int(c) for c in closed],
        "lp_objective": float(lp_obj),
    })
    if report.swcost > (1 + eps) * problem.budget:
        raise AssertionError("eps-switch rounding exceeded (1+eps)S")
    if len(sol.centers) > problem.k:
        raise AssertionError("eps-switch rounding opened more than k centers")
    return report


# ---------------------------------------------------------------------------
# Integrality-gap instance
# ---------------------------------------------------------------------------


def gap_instance(k: int, m_per: int, d_far: float):
    """k old centers pairwise at distance 1, m_per co-located prior points
    each, plus two points at mutual distance d_far and a large-but-finite
    sentinel away from everything old. Budget S = 2*m_per - 1.

    Returns (problem, record); the record carries the fractional witness and
    its exact switching cost 2M-1, the fractional cost upper bound D/M + kM,
    and the integral lower bound D.
    """
    if k < 2 or m_per < 1 or d_far <= 0:
        raise ValueError("need k >= 2, M >= 1, D > 0")
    n1 = k * m_per
    n = n1 + 2
    theta = 1000.0 * (d_far + k * m_per)
    dist = np.zeros((n, n))
    for a in range(n1):
        for b in range(n1):
            dist[a, b] = 0.0 if a // m_per == b // m_per else 1.0
    dist[n1, :n1] = dist[:n1, n1] = theta
    dist[n1 + 1, :n1] = dist[:n1, n1 + 1] = theta
    dist[n1, n1 + 1] = dist[n1 + 1, n1] = d_far
    metric = table_instance(metric_closure(dist))

    centers = tuple(c * m_per for c in range(k))
    assign = {p: (p // m_per) * m_per for p in range(n1)}
    problem = ConsistentProblem(
        metric=metric,
        p1=tuple(range(n1)),
        prior=Clustering(centers, assign),
        budget=2 * m_per - 1,
        k=k,
    )

    y_old = Fraction(k - 2, k) + Fraction(1, m_per * k)
    frac_switch = k * m_per * (1 - y_old)
    record = {
        "k": k,
        "M": m_per,
        "D": d_far,
        "S": 2 * m_per - 1,
        "sentinel": theta,
        "witness_y_old": str(y_old),
        "witness_fractional_switching": str(frac_switch),
        "witness_switching_exact": float(frac_switch),
        "lp_upper_bound": d_far / m_per + k * m_per,
        "integral_lower_bound": d_far,
    }
    assert frac_switch == 2 * m_per - 1
    return problem, record
