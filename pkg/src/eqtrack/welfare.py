"""Welfare functions, price-of-anarchy ratios, smoothness frontiers, and the
switch-constrained welfare fraction beta(C).

Welfare values are non-negative by convention. When a game carries negative
payoffs, the additive/minimum welfare tables are built from the payoffs
shifted by +M (reported via ``shift`` on the table) so the ratio definitions
stay well posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .games import GameSequence, StageGame
from .geometry import build_polytope
from .simplex import solve_lp

__all__ = [
    "WelfareFunction",
    "welfare_table",
    "optimal_welfare",
    "poa",
    "dyn_poa",
    "BetaResult",
    "beta",
    "smoothness_check",
    "best_lambda",
    "welfare_lower_bound",
    "welfare_report",
]


@dataclass(frozen=True)
class WelfareFunction:
    """``kind`` is "additive" (sum of payoffs), "minimum" (worst player), or
    "table" with explicit per-outcome values."""

    kind: str = "additive"
    table: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("additive", "minimum", "table"):
            raise ValueError(f"unknown welfare kind {self.kind!r}")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table welfare needs explicit values")
            object.__setattr__(self, "table", tuple(float(v) for v in self.table))
            if any(v < 0 for v in self.table):
                raise ValueError("welfare values must be non-negative")


@dataclass
class WelfareTable:
    values: np.ndarray         # per-outcome welfare, non-negative
    shift: float               # payoff shift applied to restore non-negativity
    payoffs: np.ndarray        # (possibly shifted) player payoffs used alongside


def welfare_table(game: StageGame, w: WelfareFunction) -> WelfareTable:
    payoffs = np.array(game.payoffs)
    shift = 0.0
    if w.kind != "table" and np.min(payoffs) < 0.0:
        shift = game.bound
        payoffs = payoffs + shift
    if w.kind == "additive":
        values = payoffs.sum(axis=0)
    elif w.kind == "minimum":
        values = payoffs.min(axis=0)
    else:
        values = np.asarray(w.table, dtype=float)
        if values.shape[0] != game.space.outcome_count:
            raise ValueError("welfare table size must match the outcome count")
    return WelfareTable(values=values, shift=shift, payoffs=payoffs)


def optimal_welfare(seq: GameSequence, w: WelfareFunction) -> float:
    """Centralized optimum: sum over periods of the best outcome's welfare."""
    total = 0.0
    for (start, end), (game, _) in zip(seq.segment_batches(), seq.segments):
        total += (end - start + 1) * float(welfare_table(game, w).values.max())
    return total


def _worst_equilibrium_welfare(game: StageGame, values: np.ndarray, kind: str) -> float:
    poly = build_polytope(game, kind, 0.0)
    sol = solve_lp(
        c=values,
        a_ub=poly.rows,
        b_ub=np.zeros(poly.rows.shape[0]),
        a_eq=np.ones((1, poly.size)),
        b_eq=np.array([1.0]),
    )
    return float(sol.value)


def _ratio(num: float, den: float) -> float:
    if den <= 1e-12:
        return 1.0 if num <= 1e-12 else math.inf
    return num / den


def poa(game: StageGame, w: WelfareFunction, kind: str = "hannan") -> float:
    """Optimal welfare over the worst equilibrium welfare (w/0 = inf,
    0/0 = 1)."""
    values = welfare_table(game, w).values
    return _ratio(float(values.max()), _worst_equilibrium_welfare(game, values, kind))


def dyn_poa(seq: GameSequence, w: WelfareFunction, kind: str = "hannan") -> float:
    """Finite-horizon surrogate of the dynamic price of anarchy: the ratio
    of time-summed optimal welfare to time-summed worst equilibrium
    welfare. The asymptotic definition's limits are approximated by the
    configured horizon; sweep T to expose the trend."""
    num = 0.0
    den = 0.0
    for (start, end), (game, _) in zip(seq.segment_batches(), seq.segments):
        length = end - start + 1
        values = welfare_table(game, w).values
        num += length * float(values.max())
        den += length * _worst_equilibrium_welfare(game, values, kind)
    return _ratio(num, den)


@dataclass
class BetaResult:
    value: float
    exact: bool

    def to_json(self):
        return {"value": self.value, "exact": self.exact}


def beta(seq: GameSequence, w: WelfareFunction, C: int, node_limit: int = 10**6) -> BetaResult:
    """Largest fraction of the optimal welfare reachable by outcome
    sequences whose every player switches at most C times.

    Exact via a DP over (period, outcome, per-player switch counts) when the
    state count fits the node limit; otherwise a certified lower bound that
    constrains the number of joint outcome switches to C (feasible, since a
    joint switch changes each player's action at most once).
    """
    if C < 0:
        raise ValueError("switch budget must be non-negative")
    space = seq.space
    z = space.outcome_count
    n = space.num_players
    batches = seq.segment_batches()
    opt = optimal_welfare(seq, w)
    if opt <= 0.0:
        return BetaResult(1.0, True)

    # Per-period welfare is constant within a batch, so some optimizer is
    # batchwise constant (collapsing a within-batch path to its best visited
    # outcome never loses value or adds switches); the DPs walk batches.
    tables = [welfare_table(g, w).values for g, _ in seq.segments]
    lengths = [end - start + 1 for start, end in batches]
    n_batches = len(tables)

    c_eff = min(C, n_batches - 1)
    exact_nodes = n_batches * z * (c_eff + 1) ** n
    if exact_nodes <= node_limit:
        best = _beta_exact(tables, lengths, space, c_eff)
        return BetaResult(best / opt, True)
    best = _beta_joint_budget(tables, lengths, z, c_eff)
    return BetaResult(best / opt, False)


def _beta_exact(tables, lengths, space, C: int) -> float:
    z = space.outcome_count
    n = space.num_players
    actions = [space.actions_of(a) for a in range(z)]
    budgets = list(product(range(C + 1), repeat=n))
    b_index = {b: i for i, b in enumerate(budgets)}

    # value[(outcome, budget-used tuple)] after consuming some prefix
    value = {}
    for a in range(z):
        value[(a, b_index[(0,) * n])] = tables[0][a] * lengths[0]
    for k in range(1, len(tables)):
        table = tables[k]
        length = lengths[k]
        new: dict[tuple[int, int], float] = {}
        for (a, bi), v in value.items():
            used = budgets[bi]
            for a2 in range(z):
                inc = tuple(
                    u + (1 if actions[a][i] != actions[a2][i] else 0) for i, u in enumerate(used)
                )
                if max(inc) > C:
                    continue
                key = (a2, b_index[inc])
                cand = v + table[a2] * length
                if cand > new.get(key, -math.inf):
                    new[key] = cand
        value = new
    return max(value.values())


def _beta_joint_budget(tables, lengths, z: int, C: int) -> float:
    # DP over (outcome, joint switches used); switching the joint outcome at
    # a batch boundary costs one unit from the shared budget
    value = np.full((C + 1, z), -np.inf)
    value[:, :] = np.array(tables[0]) * lengths[0]
    for k in range(1, len(tables)):
        stage = np.array(tables[k]) * lengths[k]
        run_max = value.max(axis=1)
        new = value.copy()
        new[1:] = np.maximum(value[1:], run_max[:-1, None])
        value = new + stage[None, :]
    return float(value[C].max())


def smoothness_check(game: StageGame, w: WelfareFunction, lam: float, mu: float) -> bool:
    """True iff sum_i u^i((a')^i, a^{-i}) >= lam W(a') - mu W(a) for every
    outcome pair (a, a')."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if mu <= -1:
        raise ValueError("mu must exceed -1")
    tbl = welfare_table(game, w)
    space = game.space
    z = space.outcome_count
    for a in range(z):
        for a_prime in range(z):
            dev = _deviation_sum(game, tbl, a, a_prime)
            if dev < lam * tbl.values[a_prime] - mu * tbl.values[a] - 1e-12:
                return False
    return True


def _deviation_sum(game: StageGame, tbl: WelfareTable, a: int, a_prime: int) -> float:
    space = game.space
    prime_actions = space.actions_of(a_prime)
    total = 0.0
    for i in range(space.num_players):
        total += tbl.payoffs[i, space.replace(a, i, prime_actions[i])]
    return float(total)


def best_lambda(game: StageGame, w: WelfareFunction, mu: float) -> float:
    """Largest lambda for which (lambda, mu)-smoothness holds: the minimum
    over pairs with W(a') > 0 of (sum_i u^i((a')^i, a^{-i}) + mu W(a)) /
    W(a'), floored at zero."""
    if mu <= -1:
        raise ValueError("mu must exceed -1")
    tbl = welfare_table(game, w)
    space = game.space
    z = space.outcome_count
    best = math.inf
    for a in range(z):
        for a_prime in range(z):
            wp = tbl.values[a_prime]
            if wp <= 0.0:
                continue
            cand = (_deviation_sum(game, tbl, a, a_prime) + mu * tbl.values[a]) / wp
            best = min(best, cand)
    if math.isinf(best):
        return 0.0
    return max(0.0, float(best))


def welfare_lower_bound(
    lam: float, mu: float, beta_val: float, opt_sw: float, n_players: int, g_T: float
) -> float:
    """Guaranteed welfare of switch-budget-consistent play in smooth games:
    lam*beta/(1+mu) * OPT - N/(1+mu) * g_T."""
    if mu <= -1:
        raise ValueError("mu must exceed -1")
    return lam * beta_val / (1.0 + mu) * opt_sw - n_players / (1.0 + mu) * g_T


def welfare_report(seq: GameSequence, w: WelfareFunction, kind: str = "hannan",
                   C: int = 0, mu: float = 1.0) -> dict:
    """One-shot JSON welfare summary for a sequence (or single game wrapped
    in a length-one sequence)."""
    opt = optimal_welfare(seq, w)
    worst = 0.0
    for (start, end), (game, _) in zip(seq.segment_batches(), seq.segments):
        values = welfare_table(game, w).values
        worst += (end - start + 1) * _worst_equilibrium_welfare(game, values, kind)
    lam = min(best_lambda(g, w, mu) for g, _ in seq.segments)
    return {
        "opt_sw": opt,
        "worst_case": worst,
        "poa": dyn_poa(seq, w, kind),
        "beta": beta(seq, w, C).to_json(),
        "smoothness": {"lambda": lam, "mu": mu},
    }
