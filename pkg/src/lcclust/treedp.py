"""Tree dynamic programs for label-consistent k-median, exact and rounded.

exact_tree_dp minimizes connection cost over the embedded tree subject to at
most k centers and a consistency floor; it is the desk-scale reference.
rounded_tree_dp flips the roles: it minimizes switching cost subject to a
connection-cost budget drawn from a geometric grid, the grid is searched for
the smallest feasible budget, and the relative rounding loss is capped at one
percent by tying the grid ratio to the tree depth.

The rounded table is stored compressed: for a fixed (node, centers) pair the
value is a non-increasing step function of the budget with few distinct
switching values, and the split minimum over a child budget D' is always
attained at one of the child's breakpoints (a larger D' with the same child
value only shrinks what the sibling gets). A dense literal fill is kept
alongside and cross-checked in tests.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .core import (
    Clustering,
    ConsistentProblem,
    SolutionReport,
    cost_kmedian,
    make_report,
    rep_seed,
    swcost,
)
from .embedding import (
    TreeEmbedding,
    WeightedInstance,
    embed,
    moving_cost,
    reduce_points,
    subtree_weights,
)

INF = math.inf

GRID_HEADROOM = 1.02  # budget ceiling above W * diameter; absorbs per-level round-ups


@dataclass(frozen=True)
class RoundedGrid:
    vals: np.ndarray  # [0, g, g(1+eps), ...], g = smallest nonzero label
    eps: float

    def size(self) -> int:
        return len(self.vals)

    def ceil_index(self, x: float) -> int:
        """Smallest grid index with value >= x (0 for x <= 0); size() if off-grid."""
        if x <= 0:
            return 0
        return int(np.searchsorted(self.vals, x * (1.0 - 1e-12), side="left"))

    def available(self, d: int, shift: float) -> bool:
        return self.vals[d] - shift >= -1e-12 * (1.0 + shift)

    def route_index(self, d: int, shift: float) -> int:
        """Grid index left for the surviving child after spending `shift` at
        budget index d; size() when the option is unavailable."""
        if not self.available(d, shift):
            return self.size()
        return self.ceil_index(max(float(self.vals[d]) - shift, 0.0))

    def first_enabling(self, shift: float, b: int) -> int:
        """Smallest budget index d with route_index(d, shift) in [b, size);
        size() if none. Evaluates the same predicate the queries use, so fill
        and reconstruction agree bit-for-bit."""
        size = self.size()
        guess = self.ceil_index(shift) if b == 0 else self.strict_index(shift + float(self.vals[b - 1]))
        d = min(guess, size)
        while d > 0:
            e = self.route_index(d - 1, shift)
            if b <= e < size:
                d -= 1
            else:
                break
        while d < size:
            e = self.route_index(d, shift)
            if b <= e < size:
                break
            d += 1
        return d

    def strict_index(self, x: float) -> int:
        """Smallest grid index with value > x; size() if off-grid."""
        return int(np.searchsorted(self.vals, x * (1.0 + 1e-12), side="right"))


def make_grid(emb: TreeEmbedding, total_weight: int, eps_override: float | None = None) -> RoundedGrid:
    """Geometric budget grid {0, g0, g0(1+eps), ..., >= headroom * W * diameter}.

    g0 is HALF the smallest nonzero label: every positive connection charge is
    at least one whole label, so budgets below that can only carry zero-cost
    subtree solutions and the round-up of a remainder never buys real cost it
    did not have. That keeps the accumulated rounding loss multiplicative.
    """
    eps = eps_override if eps_override is not None else 1.0 / (101.0 * max(1, emb.lmax))
    positive = [x for x in emb.label if x > 0]
    if not positive:
        return RoundedGrid(np.array([0.0]), eps)
    g0 = min(positive) / 2.0
    lam = GRID_HEADROOM * total_weight * max(positive)
    top = max(0, math.ceil(math.log(lam / g0) / math.log1p(eps)))
    vals = np.concatenate([[0.0], g0 * np.power(1.0 + eps, np.arange(top + 1))])
    return RoundedGrid(vals, eps)


# ---------------------------------------------------------------------------
# Rounded DP (compressed step functions)
# ---------------------------------------------------------------------------

Step = list[tuple[int, int]]  # (grid index, switching value); both strictly monotone


def _value_at(f: Step, idx: int) -> float:
    pos = bisect_right(f, (idx, INF)) - 1
    if pos < 0:
        return INF
    return f[pos][1]


def _pareto(cands: list[tuple[int, int]]) -> Step:
    cands.sort()
    out: Step = []
    for d, s in cands:
        if not out:
            out.append((d, s))
        elif d == out[-1][0]:
            continue  # ascending sort already kept the best value at this budget
        elif s < out[-1][1]:
            out.append((d, s))
    return out


def _leaf_step(rep, budget: int, leaf_init: str) -> Step:
    base = 0
    if leaf_init == "new-weight" and not rep.is_old:
        base = rep.weight
    return [(0, base)] if base <= budget else []


def rounded_step_tables(
    emb: TreeEmbedding,
    weighted: WeightedInstance,
    k: int,
    budget: int,
    leaf_init: str = "zero",
    eps_override: float | None = None,
):
    """Fill the compressed rounded table for every (node, j <= k)."""
    grid = make_grid(emb, weighted.total_weight, eps_override)
    size = grid.size()
    vals = grid.vals
    w, ow = subtree_weights(emb, weighted)
    tables: dict[tuple[int, int], Step] = {}

    def shifted(child_f: Step, shift: float, add: int) -> list[tuple[int, int]]:
        # out(D) = child(route_index(D, shift)) + add
        out = []
        for b, s in child_f:
            s2 = s + add
            if s2 > budget:
                continue
            d = grid.first_enabling(shift, b)
            if d < size:
                out.append((d, s2))
        return out

    for v in emb.postorder():
        if emb.is_leaf(v):
            step = _leaf_step(weighted.reps[emb.rep[v]], budget, leaf_init)
            for j in range(1, k + 1):
                tables[(v, j)] = list(step)
            continue
        left, right = emb.left[v], emb.right[v]
        d_id = emb.label[v]
        for j in range(1, k + 1):
            cands: list[tuple[int, int]] = []
            cands += shifted(tables[(right, j)], float(w[left]) * d_id, int(ow[left]))
            cands += shifted(tables[(left, j)], float(w[right]) * d_id, int(ow[right]))
            for kp in range(1, j):
                fl, fr = tables[(left, kp)], tables[(right, j - kp)]
                for a, sl in fl:
                    for b, sr in fr:
                        s = sl + sr
                        if s > budget:
                            continue
                        d = max(a, grid.first_enabling(float(vals[a]), b))
                        if d < size:
                            cands.append((d, s))
            tables[(v, j)] = _pareto(cands)
    return tables, grid, w, ow


def _option_values(emb, tables, grid, w, ow, v, j, d_idx):
    """All option evaluations at one state, exactly as the fill defines them."""
    left, right = emb.left[v], emb.right[v]
    d_id = emb.label[v]
    size = grid.size()
    out = []
    for child_in, child_out in ((right, left), (left, right)):
        e = grid.route_index(d_idx, float(w[child_out]) * d_id)
        if e < size:
            val = _value_at(tables[(child_in, j)], e) + int(ow[child_out])
            out.append((val, ("route", child_in, child_out, e)))
    for kp in range(1, j):
        for side in (0, 1):
            ca, cb = (left, right) if side == 0 else (right, left)
            ja, jb = (kp, j - kp) if side == 0 else (j - kp, kp)
            for a, sa in tables[(ca, ja)]:
                if a > d_idx:
                    break
                e = grid.route_index(d_idx, float(grid.vals[a]))
                if e >= size:
                    continue
                sb = _value_at(tables[(cb, jb)], e)
                if sb is INF:
                    continue
                out.append((sa + sb, ("split", ca, ja, a, cb, jb, e)))
    return out


def _reconstruct(emb, weighted, tables, grid, w, ow, k):
    """Witness extraction: among options attaining the table value, minimize
    the actual tree-metric connection cost (then fixed option order)."""
    memo: dict[tuple[int, int, int], tuple] = {}

    def rec(v: int, j: int, d_idx: int):
        key = (v, j, d_idx)
        if key in memo:
            return memo[key]
        target = _value_at(tables[(v, j)], d_idx)
        assert target < INF
        if emb.is_leaf(v):
            rr = emb.rep[v]
            res = (0.0, (rr,), {rr: rr})
            memo[key] = res
            return res
        best = None
        for val, opt in _option_values(emb, tables, grid, w, ow, v, j, d_idx):
            if val != target:
                continue
            if opt[0] == "route":
                child_in, child_out, e = opt[1], opt[2], opt[3]
                cost_in, cen_in, asg_in = rec(child_in, j, e)
                canon = min(cen_in)
                asg = dict(asg_in)
                for rr in emb.leaves_under(child_out):
                    asg[rr] = canon
                cost = float(w[child_out]) * emb.label[v] + cost_in
                cand = (cost, cen_in, asg)
            else:
                _, ca, ja, a, cb, jb, e = opt
                cost_a, cen_a, asg_a = rec(ca, ja, a)
                cost_b, cen_b, asg_b = rec(cb, jb, e)
                asg = dict(asg_a)
                asg.update(asg_b)
                cand = (cost_a + cost_b, tuple(sorted(cen_a + cen_b)), asg)
            if best is None or cand[0] < best[0] - 1e-12:
                best = cand
        assert best is not None, "table value had no matching option"
        memo[key] = best
        return best

    return rec


def rounded_tree_dp(
    emb: TreeEmbedding,
    weighted: WeightedInstance,
    k: int,
    budget: int,
    leaf_init: str = "zero",
    eps_override: float | None = None,
):
    """Minimum-budget rounded solve; returns (cost, clustering-on-reps, info).

    cost is the reconstructed solution's exact tree-metric connection cost
    (never below the exact optimum); info carries the grid value found, the
    switching value, epsilon, grid size and depth.
    """
    if k < 1:
        raise ValueError("k must be positive")
    tables, grid, w, ow = rounded_step_tables(emb, weighted, k, budget, leaf_init, eps_override)
    root_f = tables[(emb.root, k)]
    if not root_f:
        raise RuntimeError("no rounded budget satisfies the switching constraint")
    d_star, s_star = root_f[0]  # first breakpoint = smallest feasible budget
    rec = _reconstruct(emb, weighted, tables, grid, w, ow, k)
    true_cost, centers, asg = rec(emb.root, k, d_star)
    clustering = Clustering(centers, asg)
    switching = sum(
        rep.weight for rr, rep in enumerate(weighted.reps) if rep.is_old and asg[rr] != rr
    )
    assert switching == s_star and s_star <= budget
    info = {
        "grid_value": float(grid.vals[d_star]),
        "switching": int(s_star),
        "eps": float(grid.eps),
        "grid_size": int(grid.size()),
        "depth": int(emb.lmax),
    }
    return float(true_cost), clustering, info


def rounded_root_curve_dense(
    emb: TreeEmbedding,
    weighted: WeightedInstance,
    k: int,
    budget: int,
    leaf_init: str = "zero",
    eps_override: float | None = None,
) -> tuple[np.ndarray, RoundedGrid]:
    """Literal grid-loop fill (reference implementation for tests).

    Returns dp[j][D] at the root for j = 0..k; entries above the switching
    budget are left at infinity to mirror the compressed table's pruning.
    """
    grid = make_grid(emb, weighted.total_weight, eps_override)
    size = grid.size()
    if size > 4000:
        raise ValueError("dense reference needs a coarse grid; pass eps_override")
    w, ow = subtree_weights(emb, weighted)
    dp = np.full((emb.n_nodes(), k + 1, size), INF)
    for v in emb.postorder():
        if emb.is_leaf(v):
            rep = weighted.reps[emb.rep[v]]
            base = rep.weight if (leaf_init == "new-weight" and not rep.is_old) else 0
            if base <= budget:
                dp[v, 1:, :] = base
            continue
        left, right = emb.left[v], emb.right[v]
        d_id = emb.label[v]
        for j in range(1, k + 1):
            for d in range(size):
                best = INF
                for child_in, child_out in ((right, left), (left, right)):
                    e = grid.route_index(d, float(w[child_out]) * d_id)
                    if e < size:
                        best = min(best, dp[child_in, j, e] + int(ow[child_out]))
                for kp in range(1, j):
                    for a in range(d + 1):
                        lv = dp[left, kp, a]
                        if not np.isfinite(lv):
                            continue
                        e = grid.route_index(d, float(grid.vals[a]))
                        if e < size:
                            best = min(best, lv + dp[right, j - kp, e])
                if best <= budget:
                    dp[v, j, d] = best
    return dp[emb.root], grid


def step_to_dense(f: Step, size: int) -> np.ndarray:
    out = np.full(size, INF)
    for d, s in f:
        out[d:] = np.minimum(out[d:], s)
    return out


# ---------------------------------------------------------------------------
# Exact DP
# ---------------------------------------------------------------------------


def exact_dp_tables(emb: TreeEmbedding, weighted: WeightedInstance, k: int, budget: int):
    """dp[v][j][c - lo_v] = min tree cost in v's subtree with at most j centers
    and consistency >= c. The c axis is windowed per node to
    [max(0, oldweight - S), oldweight]; values below the floor are never
    consulted (a parent requirement that low is met by the floor entry)."""
    w, ow = subtree_weights(emb, weighted)
    lo = [max(0, int(x) - budget) for x in ow]
    hi = [int(x) for x in ow]
    tables: dict[int, list[list[float]]] = {}
    back: dict[tuple[int, int, int], tuple] = {}

    def get(v: int, j: int, c: int) -> float:
        if c > hi[v]:
            return INF
        c = max(c, lo[v])
        return tables[v][j][c - lo[v]]

    for v in emb.postorder():
        width = hi[v] - lo[v] + 1
        tab = [[INF] * width for _ in range(k + 1)]
        if emb.is_leaf(v):
            rep = weighted.reps[emb.rep[v]]
            for j in range(1, k + 1):
                for c in range(lo[v], hi[v] + 1):
                    if c == 0 or (rep.is_old and rep.weight >= c):
                        tab[j][c - lo[v]] = 0.0
        else:
            left, right = emb.left[v], emb.right[v]
            d_id = emb.label[v]
            for j in range(1, k + 1):
                for c in range(lo[v], hi[v] + 1):
                    best = get(right, j, c) + float(w[left]) * d_id
                    tag: tuple = ("A",)
                    cand = get(left, j, c) + float(w[right]) * d_id
                    if cand < best - 1e-12:
                        best, tag = cand, ("B",)
                    for jp in range(1, j):
                        for cp in range(max(lo[left], c - hi[right]), min(hi[left], c) + 1):
                            cand = get(left, jp, cp) + get(right, j - jp, c - cp)
                            if cand < best - 1e-12:
                                best, tag = cand, ("C", jp, cp)
                    tab[j][c - lo[v]] = best
                    if best < INF:
                        back[(v, j, c)] = tag
        tables[v] = tab
    return tables, back, lo, hi, w, ow


def exact_tree_dp(emb: TreeEmbedding, weighted: WeightedInstance, k: int, budget: int):
    """Exact optimum on the tree; returns (cost, clustering-on-reps)."""
    if k < 1:
        raise ValueError("k must be positive")
    tables, back, lo, hi, w, ow = exact_dp_tables(emb, weighted, k, budget)
    root = emb.root
    cost = tables[root][k][0]  # c floor entry; dp is non-decreasing in c
    if not cost < INF:
        raise RuntimeError("no tree solution meets the consistency floor")

    asg: dict[int, int] = {}

    def walk(v: int, j: int, c: int) -> list[int]:
        """Open centers for state (v, j, c); returns the reps opened under v."""
        c = max(c, lo[v])
        if emb.is_leaf(v):
            rr = emb.rep[v]
            asg[rr] = rr
            return [rr]
        tag = back[(v, j, c)]
        left, right = emb.left[v], emb.right[v]
        if tag[0] in ("A", "B"):
            child_in, child_out = (right, left) if tag[0] == "A" else (left, right)
            opened = walk(child_in, j, min(c, hi[child_in]))
            canon = min(opened)
            for rr in emb.leaves_under(child_out):
                asg[rr] = canon
            return opened
        _, jp, cp = tag
        return walk(left, jp, cp) + walk(right, j - jp, c - cp)

    opened = walk(root, k, lo[root])
    return float(cost), Clustering(tuple(sorted(opened)), asg)


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------


def default_repetitions(n: int) -> int:
    return max(1, math.ceil(10 * math.log2(max(2, n))))


def lift_solution(problem: ConsistentProblem, weighted: WeightedInstance, rep_sol: Clustering) -> Clustering:
    """Map a rep-level solution back to original points via the reduction."""
    centers = tuple(sorted(weighted.reps[rr].point for rr in rep_sol.centers))
    assign = {
        p: weighted.reps[rep_sol.assign[weighted.rep_of[p]]].point
        for p in range(problem.n)
    }
    return Clustering(centers, assign)


EXACT_DP_OP_BUDGET = 2_000_000  # guard on t * S^2 * k^2 for the --exact path


def solve_pipeline(
    problem: ConsistentProblem,
    seed: int,
    repetitions: int | None = None,
    multiplier: float = 2.0,
    leaf_init: str = "zero",
    exact: bool = False,
    exact_op_budget: int = EXACT_DP_OP_BUDGET,
) -> SolutionReport:
    """reduce -> embed -> rounded DP -> lift, repeated; best repetition wins.

    Switching stays within budget deterministically: the lifted assignment
    follows the DP routing, and an old point keeps its center exactly when the
    DP keeps its representative open. Cost and swcost are recomputed on the
    original metric. exact=True swaps in the exact DP (guarded: its table is
    quadratic in the budget, so it is a desk-scale path only).
    """
    reps_n = repetitions if repetitions is not None else default_repetitions(problem.n)
    best = None
    for i in range(reps_n):
        child = rep_seed(seed, i)
        weighted = reduce_points(problem, child, multiplier=multiplier)
        emb = embed(weighted, problem.metric, child)
        if exact:
            t = len(weighted.reps)
            ops = t * (problem.budget + 1) ** 2 * problem.k**2
            if ops > exact_op_budget:
                raise ValueError(
                    f"exact DP guard: t*S^2*k^2 = {ops} exceeds {exact_op_budget}"
                )
            tree_cost, rep_sol = exact_tree_dp(emb, weighted, problem.k, problem.budget)
            info = {"exact": True, "depth": int(emb.lmax)}
        else:
            tree_cost, rep_sol, info = rounded_tree_dp(emb, weighted, problem.k, problem.budget, leaf_init)
        sol = lift_solution(problem, weighted, rep_sol)
        cost = cost_kmedian(problem, sol)
        sw = swcost(problem, sol)
        move = moving_cost(problem, weighted)
        if sw > problem.budget:
            raise AssertionError("pipeline produced an over-budget assignment")
        if cost > move + tree_cost + 1e-6 * (1.0 + move + tree_cost):
            raise AssertionError("cost decomposition bound violated")
        if best is None or cost < best[0] - 1e-12:
            best = (cost, i, sol, sw, move, tree_cost, info)
    cost, i, sol, sw, move, tree_cost, info = best
    meta = {
        "algorithm": "kmedian-dp",
        "seed": int(seed),
        "repetitions": int(reps_n),
        "best_repetition": int(i),
        "moving_cost": float(move),
        "tree_cost": float(tree_cost),
        "multiplier": float(multiplier),
        "leaf_init": leaf_init,
        "exact": bool(exact),
        "dp": info,
    }
    return make_report(problem, sol, "kmedian", meta=meta)
