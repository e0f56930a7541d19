"""Self-contained dense simplex for desk-scale linear programs.

minimize c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.

Two-phase tableau method. Pivoting uses Dantzig's rule until a run of
degenerate pivots, then switches to Bland's rule, which guarantees
termination; ratio-test ties always leave the smallest basis index. All rules
are index-based, so solves are deterministic. Optimal basic solutions are
vertices of the feasible region, which the rounding stage relies on.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-9
_BLAND_TRIGGER = 40


class SimplexError(RuntimeError):
    pass


class Infeasible(SimplexError):
    pass


class Unbounded(SimplexError):
    pass


def _pivot(tab: np.ndarray, cost: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    colvals = tab[:, col].copy()
    colvals[row] = 0.0
    tab -= np.outer(colvals, tab[row])
    cost -= cost[col] * tab[row]
    basis[row] = col


def _run(tab: np.ndarray, cost: np.ndarray, basis: np.ndarray, ncols: int, maxiter: int) -> None:
    degenerate_run = 0
    for _ in range(maxiter):
        reduced = cost[:ncols]
        if degenerate_run >= _BLAND_TRIGGER:
            neg = np.flatnonzero(reduced < -_EPS)
            if neg.size == 0:
                return
            col = int(neg[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -_EPS:
                return
        coeffs = tab[:, col]
        rows = np.flatnonzero(coeffs > _EPS)
        if rows.size == 0:
            raise Unbounded("LP is unbounded along an improving direction")
        ratios = tab[rows, -1] / coeffs[rows]
        best = ratios.min()
        tied = rows[ratios <= best + _EPS * (1.0 + abs(best))]
        row = int(tied[np.argmin(basis[tied])])
        degenerate_run = degenerate_run + 1 if best <= _EPS else 0
        _pivot(tab, cost, basis, row, col)
    raise SimplexError(f"simplex iteration cap {maxiter} exceeded")


def solve_lp(
    c,
    a_ub=None,
    b_ub=None,
    a_eq=None,
    b_eq=None,
    maxiter: int | None = None,
):
    """Returns (x, objective) at an optimal vertex.

    Raises Infeasible / Unbounded / SimplexError accordingly.
    """
    c = np.asarray(c, dtype=np.float64)
    n = c.shape[0]
    rows = []
    rhs = []
    senses = []
    if a_ub is not None and len(a_ub):
        a_ub = np.asarray(a_ub, dtype=np.float64)
        b_ub = np.asarray(b_ub, dtype=np.float64)
        rows.append(a_ub)
        rhs.append(b_ub)
        senses += ["ub"] * a_ub.shape[0]
    if a_eq is not None and len(a_eq):
        a_eq = np.asarray(a_eq, dtype=np.float64)
        b_eq = np.asarray(b_eq, dtype=np.float64)
        rows.append(a_eq)
        rhs.append(b_eq)
        senses += ["eq"] * a_eq.shape[0]
    if not rows:
        if np.any(c < -_EPS):
            raise Unbounded("no constraints and a negative cost component")
        return np.zeros(n), 0.0
    a = np.vstack(rows)
    b = np.concatenate(rhs)
    m = a.shape[0]
    n_slack = sum(1 for s in senses if s == "ub")

    full = np.zeros((m, n + n_slack))
    full[:, :n] = a
    slack_of_row = {}
    si = 0
    for i, s in enumerate(senses):
        if s == "ub":
            full[i, n + si] = 1.0
            slack_of_row[i] = n + si
            si += 1

    flip = b < 0
    full[flip] *= -1.0
    b = np.where(flip, -b, b)

    # artificials for equality rows and for flipped inequality rows
    needs_art = [i for i in range(m) if senses[i] == "eq" or flip[i]]
    n_art = len(needs_art)
    ncols = n + n_slack + n_art
    tab = np.zeros((m, ncols + 1))
    tab[:, : n + n_slack] = full
    tab[:, -1] = b
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        basis[i] = -1
    for idx, i in enumerate(needs_art):
        tab[i, n + n_slack + idx] = 1.0
        basis[i] = n + n_slack + idx
    for i in range(m):
        if basis[i] == -1:
            basis[i] = slack_of_row[i]

    if maxiter is None:
        maxiter = 200 * (m + ncols) + 2000

    if n_art:
        cost1 = np.zeros(ncols + 1)
        cost1[n + n_slack:ncols] = 1.0
        for i in needs_art:
            cost1 -= tab[i]
        _run(tab, cost1, basis, ncols, maxiter)
        if -cost1[-1] > 1e-7 * (1.0 + abs(b).max()):
            raise Infeasible("phase-I optimum is positive")
        # drive leftover artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n + n_slack:
                pivots = np.flatnonzero(np.abs(tab[i, : n + n_slack]) > _EPS)
                if pivots.size:
                    _pivot(tab, cost1, basis, i, int(pivots[0]))
                else:
                    keep[i] = False
        tab = tab[keep]
        basis = basis[keep]
        m = tab.shape[0]
        tab = np.delete(tab, np.s_[n + n_slack : ncols], axis=1)
        ncols = n + n_slack

    cost = np.zeros(ncols + 1)
    cost[:n] = c
    for i in range(m):
        if cost[basis[i]] != 0.0:
            cost -= cost[basis[i]] * tab[i]
    _run(tab, cost, basis, ncols, maxiter)

    x = np.zeros(ncols)
    for i in range(m):
        x[basis[i]] = tab[i, -1]
    sol = x[:n]
    return sol, float(c @ sol)
