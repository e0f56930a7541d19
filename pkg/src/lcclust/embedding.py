"""Point reduction onto weighted representatives and random tree embeddings.

The reduction moves every prior point onto its old center and every new point
onto a center chosen by distance-proportional seeding, leaving O(k) weighted
representatives. The embedding samples a hierarchical ball decomposition of
the representatives (random permutation + random radius scale, halving per
level), binarizes it, and labels every node with the exact diameter of its
leaf set, so tree distances always dominate metric distances.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import (
    STREAM_EMBED,
    STREAM_REDUCE,
    ConsistentProblem,
    MetricInstance,
    child_rng,
)


@dataclass(frozen=True)
class Rep:
    """One weighted representative: a P2 point standing for `weight` originals."""

    point: int
    weight: int
    is_old: bool  # True when the rep is a prior center serving its old cluster


@dataclass(frozen=True)
class WeightedInstance:
    reps: tuple[Rep, ...]
    rep_of: dict[int, int]  # original point -> index into reps
    total_weight: int

    def __post_init__(self):
        if sum(r.weight for r in self.reps) != self.total_weight:
            raise ValueError("rep weights must sum to the total weight")
        if any(r.weight <= 0 for r in self.reps):
            raise ValueError("rep weights must be positive")

    def old_weight(self) -> int:
        return sum(r.weight for r in self.reps if r.is_old)

    def points(self) -> list[int]:
        return [r.point for r in self.reps]


def d1_seeding(metric: MetricInstance, candidates: list[int], count: int,
               rng: np.random.Generator) -> list[int]:
    """Distance-proportional seeding over `candidates`.

    First pick uniform; each next pick proportional to distance to the nearest
    already-chosen center. Stops early once every candidate is co-located with
    a chosen center or the pool is exhausted.
    """
    cand = sorted(candidates)
    if not cand or count <= 0:
        return []
    chosen = [cand[int(rng.integers(len(cand)))]]
    dist = metric.row(chosen[0])[cand].copy()
    while len(chosen) < min(count, len(cand)):
        total = dist.sum()
        if total <= 0:
            break
        pick = int(rng.choice(len(cand), p=dist / total))
        chosen.append(cand[pick])
        np.minimum(dist, metric.row(cand[pick])[cand], out=dist)
    return chosen


def reduce_points(problem: ConsistentProblem, seed: int,
                  multiplier: float = 2.0) -> WeightedInstance:
    """Collapse P2 onto O(k) weighted representatives.

    Prior points move to their old centers (one old rep per nonempty cluster,
    weight = cluster size); new points move to the nearest of ceil(multiplier*k)
    seeded centers. Zero-weight reps are dropped.
    """
    if multiplier < 1:
        raise ValueError("multiplier must be at least 1")
    rng = child_rng(seed, STREAM_REDUCE)
    metric = problem.metric
    reps: list[Rep] = []
    rep_of: dict[int, int] = {}

    sizes = Counter(problem.prior.assign.values())
    index_of_center: dict[int, int] = {}
    for c in sorted(problem.prior.centers):
        w = sizes.get(c, 0)
        if w == 0:
            continue
        index_of_center[c] = len(reps)
        reps.append(Rep(point=c, weight=w, is_old=True))
    for p, c in problem.prior.assign.items():
        rep_of[p] = index_of_center[c]

    new_pts = problem.new_points()
    if new_pts:
        target = math.ceil(multiplier * problem.k)
        centers = d1_seeding(metric, new_pts, target, rng)
        rows = metric.rows(sorted(centers))
        order = sorted(centers)
        counts: Counter = Counter()
        choice: dict[int, int] = {}
        for p in new_pts:
            j = int(np.argmin(rows[:, p]))
            choice[p] = order[j]
            counts[order[j]] += 1
        index_of_new: dict[int, int] = {}
        for c in order:
            if counts[c] == 0:
                continue
            index_of_new[c] = len(reps)
            reps.append(Rep(point=c, weight=counts[c], is_old=False))
        for p in new_pts:
            rep_of[p] = index_of_new[choice[p]]

    out = WeightedInstance(tuple(reps), rep_of, metric.n)
    return merge_colocated_new_reps(out, metric)


def moving_cost(problem: ConsistentProblem, weighted: WeightedInstance) -> float:
    """Total distance traveled collapsing originals onto their representatives."""
    m = problem.metric
    return float(
        sum(m.d(p, weighted.reps[r].point) for p, r in weighted.rep_of.items())
    )


@dataclass
class TreeEmbedding:
    """Rooted binary tree over representatives with monotone diameter labels."""

    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    rep: list[int] = field(default_factory=list)  # leaf payload, -1 internal
    label: list[float] = field(default_factory=list)
    parent: list[int] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)
    root: int = -1
    lmax: int = 0
    leaf_of: dict[int, int] = field(default_factory=dict)  # rep index -> node

    def n_nodes(self) -> int:
        return len(self.label)

    def is_leaf(self, v: int) -> bool:
        return self.rep[v] >= 0

    def leaves_under(self, v: int) -> list[int]:
        out, stack = [], [v]
        while stack:
            u = stack.pop()
            if self.is_leaf(u):
                out.append(self.rep[u])
            else:
                stack.extend((self.right[u], self.left[u]))
        return out

    def postorder(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            u = stack.pop()
            out.append(u)
            if not self.is_leaf(u):
                stack.extend((self.left[u], self.right[u]))
        out.reverse()
        return out

    def to_dict(self) -> dict:
        nodes = []
        for v in range(self.n_nodes()):
            nodes.append(
                {
                    "id": v,
                    "label": self.label[v],
                    "children": [] if self.is_leaf(v) else [self.left[v], self.right[v]],
                    "rep": self.rep[v] if self.is_leaf(v) else None,
                }
            )
        return {"root": self.root, "depth": self.lmax, "nodes": nodes}


def merge_colocated_new_reps(weighted: WeightedInstance,
                             metric: MetricInstance) -> WeightedInstance:
    """Merge co-located new reps (weights summed). Old reps are never merged:
    each is a distinct prior center even at distance zero."""
    reps = weighted.reps
    keep: list[Rep] = []
    remap: dict[int, int] = {}
    for i, r in enumerate(reps):
        if r.is_old:
            remap[i] = len(keep)
            keep.append(r)
            continue
        target = -1
        for j, kr in enumerate(keep):
            if not kr.is_old and metric.d(kr.point, r.point) == 0.0:
                target = j
                break
        if target >= 0:
            keep[target] = Rep(keep[target].point, keep[target].weight + r.weight, False)
            remap[i] = target
        else:
            remap[i] = len(keep)
            keep.append(r)
    if len(keep) == len(reps):
        return weighted
    rep_of = {p: remap[r] for p, r in weighted.rep_of.items()}
    return WeightedInstance(tuple(keep), rep_of, weighted.total_weight)


def embed(weighted: WeightedInstance, metric: MetricInstance, seed: int) -> TreeEmbedding:
    """Sample a tree embedding of the representatives.

    One random permutation and one radius scale beta in [1,2) are drawn per
    embedding; level radii halve downward and a cluster member joins the first
    rep in permutation order within the level radius. Multiway splits are
    binarized balanced; every node's label is the exact diameter of its leaf
    set. Co-located reps end up under zero-label nodes, so the tree is valid
    whether or not they were merged beforehand.
    """
    t = len(weighted.reps)
    if t == 0:
        raise ValueError("cannot embed an empty instance")
    rng = child_rng(seed, STREAM_EMBED)
    perm = [int(x) for x in rng.permutation(t)]
    beta = 1.0 + float(rng.random())

    pts = weighted.points()
    dmat = metric.submatrix(pts)

    emb = TreeEmbedding()

    def new_node(rep_idx: int, label: float) -> int:
        v = emb.n_nodes()
        emb.left.append(-1)
        emb.right.append(-1)
        emb.rep.append(rep_idx)
        emb.label.append(label)
        emb.parent.append(-1)
        emb.depth.append(0)
        if rep_idx >= 0:
            emb.leaf_of[rep_idx] = v
        return v

    def diam(members: list[int]) -> float:
        sub = dmat[np.ix_(members, members)]
        return float(sub.max(initial=0.0))

    def binarize(subtrees: list[tuple[int, list[int]]]) -> tuple[int, list[int]]:
        """Balanced pairwise combining; returns (node, member list)."""
        if len(subtrees) == 1:
            return subtrees[0]
        mid = len(subtrees) // 2
        lnode, lmem = binarize(subtrees[:mid])
        rnode, rmem = binarize(subtrees[mid:])
        members = lmem + rmem
        v = new_node(-1, diam(members))
        emb.left[v], emb.right[v] = lnode, rnode
        emb.parent[lnode] = emb.parent[rnode] = v
        return v, members

    def build(members: list[int], level: int) -> tuple[int, list[int]]:
        if len(members) == 1:
            return new_node(members[0], 0.0), members
        if diam(members) == 0.0:
            leaves = [(new_node(m, 0.0), [m]) for m in members]
            return binarize(leaves)
        while True:
            radius = beta * (2.0 ** level)
            groups: dict[int, list[int]] = {}
            for x in members:
                for u in perm:
                    if dmat[x, u] <= radius:
                        groups.setdefault(u, []).append(x)
                        break
            if len(groups) > 1:
                break
            level -= 1
        order = sorted(groups, key=perm.index)
        subtrees = [build(groups[u], level - 1) for u in order]
        return binarize(subtrees)

    top_level = 0
    dmax = float(dmat.max(initial=0.0))
    if dmax > 0:
        top_level = math.ceil(math.log2(dmax)) if dmax > 1 else 0
    emb.root = build(list(range(t)), top_level)[0]

    # depths via BFS from the root
    stack = [emb.root]
    emb.depth[emb.root] = 0
    while stack:
        u = stack.pop()
        if not emb.is_leaf(u):
            for c in (emb.left[u], emb.right[u]):
                emb.depth[c] = emb.depth[u] + 1
                stack.append(c)
    emb.lmax = max(emb.depth)
    return emb


def tree_distance(emb: TreeEmbedding, a: int, b: int) -> float:
    """Label of the lowest common ancestor of reps a and b; 0 when a == b."""
    if a not in emb.leaf_of or b not in emb.leaf_of:
        raise KeyError("unknown representative")
    if a == b:
        return 0.0
    u, v = emb.leaf_of[a], emb.leaf_of[b]
    while emb.depth[u] > emb.depth[v]:
        u = emb.parent[u]
    while emb.depth[v] > emb.depth[u]:
        v = emb.parent[v]
    while u != v:
        u, v = emb.parent[u], emb.parent[v]
    return emb.label[u]


def tree_distance_matrix(emb: TreeEmbedding, t: int) -> np.ndarray:
    out = np.zeros((t, t))
    for a in range(t):
        for b in range(a + 1, t):
            out[a, b] = out[b, a] = tree_distance(emb, a, b)
    return out


def subtree_weights(emb: TreeEmbedding, weighted: WeightedInstance) -> tuple[np.ndarray, np.ndarray]:
    """Per-node (total weight, old-rep weight) aggregates for the DPs."""
    n = emb.n_nodes()
    w = np.zeros(n, dtype=np.int64)
    ow = np.zeros(n, dtype=np.int64)
    for v in emb.postorder():
        if emb.is_leaf(v):
            r = weighted.reps[emb.rep[v]]
            w[v] = r.weight
            ow[v] = r.weight if r.is_old else 0
        else:
            w[v] = w[emb.left[v]] + w[emb.right[v]]
            ow[v] = ow[emb.left[v]] + ow[emb.right[v]]
    return w, ow
