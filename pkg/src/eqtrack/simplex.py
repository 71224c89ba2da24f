"""Dense two-phase tableau simplex for the small polytope problems used by
the geometry and welfare modules.

Solves  min c.x  s.t.  A_ub x <= b_ub, A_eq x = b_eq, x >= 0.

Bland's rule is used for both the entering and the leaving variable, which
makes the pivot path deterministic and cycle-free; the problems here have at
most a few hundred rows/columns, so speed is not a concern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPSolution", "SimplexError", "LPInfeasible", "LPUnbounded", "solve_lp"]

_TOL = 1e-9


class SimplexError(RuntimeError):
    pass


class LPInfeasible(SimplexError):
    pass


class LPUnbounded(SimplexError):
    pass


@dataclass
class LPSolution:
    x: np.ndarray
    value: float
    iterations: int


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _bland_iterate(tab: np.ndarray, basis: np.ndarray, cost: np.ndarray, ncols: int, maxiter: int) -> int:
    """Run simplex pivots until optimality; ``cost`` is the reduced-cost row
    (updated in place). Returns the number of pivots performed."""
    m = tab.shape[0]
    for it in range(maxiter):
        enter = -1
        for j in range(ncols):
            if cost[j] < -_TOL:
                enter = j
                break
        if enter < 0:
            return it
        # leaving variable: min ratio, ties broken by lowest basic index (Bland)
        leave = -1
        best = np.inf
        for r in range(m):
            a = tab[r, enter]
            if a > _TOL:
                ratio = tab[r, -1] / a
                if ratio < best - _TOL or (ratio < best + _TOL and (leave < 0 or basis[r] < basis[leave])):
                    best = ratio
                    leave = r
        if leave < 0:
            raise LPUnbounded("objective unbounded below on the feasible set")
        _pivot(tab, basis, leave, enter)
        cost -= cost[enter] * tab[leave]
    raise SimplexError(
        f"simplex pivot guard exceeded after {maxiter} iterations "
        f"(m={m}, n={ncols}); problem may be numerically degenerate"
    )


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None, maxiter: int = 20000) -> LPSolution:
    c = np.asarray(c, dtype=float)
    n = c.shape[0]

    rows = []
    rhs = []
    n_slack = 0 if a_ub is None else len(b_ub)
    if a_ub is not None:
        a_ub = np.asarray(a_ub, dtype=float)
        b_ub = np.asarray(b_ub, dtype=float)
        for i in range(a_ub.shape[0]):
            slack = np.zeros(n_slack)
            slack[i] = 1.0
            rows.append(np.concatenate([a_ub[i], slack]))
            rhs.append(b_ub[i])
    if a_eq is not None:
        a_eq = np.asarray(a_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float)
        for i in range(a_eq.shape[0]):
            rows.append(np.concatenate([a_eq[i], np.zeros(n_slack)]))
            rhs.append(b_eq[i])

    if not rows:
        raise ValueError("LP needs at least one constraint")
    a = np.array(rows)
    b = np.array(rhs, dtype=float)
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    m = a.shape[0]
    n_ext = n + n_slack

    # phase 1: artificial basis, minimize the artificial sum
    tab = np.zeros((m, n_ext + m + 1))
    tab[:, :n_ext] = a
    tab[:, n_ext : n_ext + m] = np.eye(m)
    tab[:, -1] = b
    basis = np.arange(n_ext, n_ext + m)

    cost = np.zeros(n_ext + m + 1)
    cost[n_ext : n_ext + m] = 1.0
    cost -= tab.sum(axis=0)
    it1 = _bland_iterate(tab, basis, cost, n_ext + m, maxiter)
    if -cost[-1] > 1e-7:
        raise LPInfeasible(f"phase-1 optimum {-cost[-1]:.3e} > 0: no feasible point")

    # drive leftover artificials out of the basis (degenerate rows)
    drop = []
    for r in range(m):
        if basis[r] >= n_ext:
            piv = -1
            for j in range(n_ext):
                if abs(tab[r, j]) > _TOL:
                    piv = j
                    break
            if piv < 0:
                drop.append(r)  # redundant constraint
            else:
                _pivot(tab, basis, r, piv)
    if drop:
        keep = [r for r in range(m) if r not in drop]
        tab = tab[keep]
        basis = basis[keep]
        m = len(keep)

    tab = np.concatenate([tab[:, :n_ext], tab[:, -1:]], axis=1)

    # phase 2
    cost = np.concatenate([c, np.zeros(n_slack + 1)])
    for r in range(m):
        if cost[basis[r]] != 0.0:
            cost -= cost[basis[r]] * tab[r]
    it2 = _bland_iterate(tab, basis, cost, n_ext, maxiter)

    x = np.zeros(n_ext)
    x[basis] = tab[:, -1]
    x = np.maximum(x[:n], 0.0)
    return LPSolution(x=x, value=float(c @ x), iterations=it1 + it2)
