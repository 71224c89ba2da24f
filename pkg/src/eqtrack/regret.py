"""Exact hindsight benchmarks and regret computation.

Two oracles are provided, both exact dynamic programs:

* external: best action sequence with at most C switches,
  ``max sum_t g[t][x_t]`` over ``(x_t)`` with ``<= C`` changes;
* internal: best partition of the horizon into at most C+1 intervals, each
  interval charged its best swap pair ``(x -> y)``:
  ``max sum_I max_{x,y} sum_{t in I} 1(a_t = x)(g[t][y] - g[t][x])``.

Gains are ``g[t][x] = u^i_t(x, a^{-i}_t)``, the payoff player ``i`` would
have collected by playing ``x`` against the realized opponent profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import GameSequence

__all__ = [
    "GainMatrix",
    "RegretReport",
    "external_dynamic_benchmark",
    "internal_dynamic_benchmark",
    "internal_batch_benchmark",
    "realized_regret",
    "clipped_batch_regret",
]

# horizon above which realized_regret(kind="internal") falls back to the
# batch-aligned partition (exact whenever C >= variation)
INTERNAL_EXACT_MAX_T = 4000


@dataclass
class GainMatrix:
    """Counterfactual own-action gains of one player along a realized trace."""

    gains: np.ndarray              # (T, K)
    played: np.ndarray | None = None  # (T,) actions of the focal player

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        if self.gains.ndim != 2 or self.gains.size == 0:
            raise ValueError("gain matrix must be a non-empty (T, K) array")
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("gains must be finite")
        if self.played is not None:
            self.played = np.asarray(self.played, dtype=np.int64)
            if self.played.shape != (self.gains.shape[0],):
                raise ValueError("played actions must align with the horizon")

    @property
    def horizon(self) -> int:
        return self.gains.shape[0]

    @property
    def num_actions(self) -> int:
        return self.gains.shape[1]

    @classmethod
    def from_trace(cls, seq: GameSequence, actions, player: int) -> "GainMatrix":
        actions = np.asarray(actions, dtype=np.int64)
        if actions.ndim != 2 or actions.shape[1] != seq.space.num_players:
            raise ValueError("actions must be a (T, N) array")
        if actions.shape[0] != seq.horizon:
            raise ValueError(
                f"trace length {actions.shape[0]} does not match horizon {seq.horizon}"
            )
        space = seq.space
        k_i = space.actions_per_player[player]
        radix = np.ones(space.num_players, dtype=np.int64)
        for j in range(space.num_players - 2, -1, -1):
            radix[j] = radix[j + 1] * space.actions_per_player[j + 1]
        outcome_idx = actions @ radix
        gains = np.empty((seq.horizon, k_i))
        for (start, end), (game, _) in zip(seq.segment_batches(), seq.segments):
            lut = np.empty((space.outcome_count, k_i))
            for o in range(space.outcome_count):
                for x in range(k_i):
                    lut[o, x] = game.payoffs[player, space.replace(o, player, x)]
            gains[start - 1 : end] = lut[outcome_idx[start - 1 : end]]
        realized = gains[np.arange(seq.horizon), actions[:, player]]
        gm = cls(gains=gains, played=actions[:, player].copy())
        gm._realized_cache = realized  # type: ignore[attr-defined]
        return gm

    def realized_value(self) -> float:
        if self.played is None:
            return 0.0
        cached = getattr(self, "_realized_cache", None)
        if cached is not None:
            return float(cached.sum())
        return float(self.gains[np.arange(self.horizon), self.played].sum())


@dataclass
class RegretReport:
    benchmark: float
    realized: float
    regret: float
    comparator: list | None
    switches: int
    kind: str
    exact: bool = True

    def to_json(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "realized": self.realized,
            "regret": self.regret,
            "comparator": self.comparator,
            "switches": self.switches,
            "kind": self.kind,
            "exact": self.exact,
        }


def external_dynamic_benchmark(g: GainMatrix, C: int, need_comparator: bool = True) -> RegretReport:
    """Exact best-sequence-with-<=C-switches benchmark.

    Runs a suffix DP over states (period, action, remaining switches) with a
    running max over the switch dimension, O(T K (C+1)). The reconstructed
    optimizer breaks ties toward the earliest switch, then the lowest action
    index.
    """
    if C < 0:
        raise ValueError("switch budget must be non-negative")
    t_len, k = g.horizon, g.num_actions
    c_budget = min(int(C), t_len - 1)
    gains = g.gains

    if not need_comparator:
        # forward value-only pass, vectorized over (switches, action)
        best = np.tile(gains[0], (c_budget + 1, 1))
        for t in range(1, t_len):
            run_max = best.max(axis=1)
            stay = best
            stay[1:] = np.maximum(best[1:], run_max[:-1, None])
            best = gains[t][None, :] + stay
        value = float(best[c_budget].max())
        report = RegretReport(
            benchmark=value,
            realized=g.realized_value(),
            regret=value - g.realized_value(),
            comparator=None,
            switches=-1,
            kind="external",
        )
        return report

    # suffix DP kept in full for deterministic reconstruction
    suf = np.zeros((t_len + 1, c_budget + 1, k))
    for t in range(t_len - 1, -1, -1):
        nxt = suf[t + 1]
        run_max = nxt.max(axis=1)
        cur = nxt.copy()
        cur[1:] = np.maximum(nxt[1:], run_max[:-1, None])
        suf[t] = gains[t][None, :] + cur

    start_vals = suf[0][c_budget]
    action = int(np.flatnonzero(start_vals == start_vals.max())[0])
    value = float(start_vals[action])

    seq = [action]
    switch_periods = []
    c = c_budget
    for t in range(1, t_len):
        stay_val = suf[t][c][action]
        best_other = -np.inf
        best_j = -1
        if c > 0:
            row = suf[t][c - 1]
            for j in range(k):
                if j != action and row[j] > best_other:
                    best_other = row[j]
                    best_j = j
        if c > 0 and best_other >= stay_val:
            action = best_j
            c -= 1
            switch_periods.append(t + 1)  # 1-based period at which the new action starts
        seq.append(action)

    realized = g.realized_value()
    return RegretReport(
        benchmark=value,
        realized=realized,
        regret=value - realized,
        comparator=[{"actions": seq, "switch_periods": switch_periods}],
        switches=len(switch_periods),
        kind="external",
    )


def _swap_prefixes(actions: np.ndarray, gains: np.ndarray) -> np.ndarray:
    """P[t, x*K+y] = sum over tau < t of 1(a_tau = x)(g[tau][y] - g[tau][x])."""
    t_len, k = gains.shape
    inc = np.zeros((t_len, k * k))
    rows = np.arange(t_len)
    diffs = gains - gains[rows, actions][:, None]  # (T, K): g[t][y] - g[t][a_t]
    for y in range(k):
        inc[rows, actions * k + y] = diffs[:, y]
    out = np.zeros((t_len + 1, k * k))
    np.cumsum(inc, axis=0, out=out[1:])
    return out


def internal_dynamic_benchmark(
    actions, g: GainMatrix, C: int, need_comparator: bool = True
) -> RegretReport:
    """Exact best interval-partitioned swap benchmark.

    Per-pair prefix sums make each interval's best swap an O(K^2) lookup;
    the interval DP is O(T^2 (C+1)). The value is always non-negative (the
    identity swap is feasible on every interval).
    """
    if C < 0:
        raise ValueError("switch budget must be non-negative")
    actions = np.asarray(actions, dtype=np.int64)
    t_len, k = g.horizon, g.num_actions
    if actions.shape != (t_len,):
        raise ValueError("actions must have one entry per period")
    pref = _swap_prefixes(actions, g.gains)

    max_parts = min(int(C) + 1, t_len)
    # f[j] = best value over prefix of length j using exactly `parts` intervals
    f = np.full(t_len + 1, -np.inf)
    f[0] = 0.0
    arg: list[np.ndarray] = []
    for _ in range(max_parts):
        nf = np.full(t_len + 1, -np.inf)
        split = np.zeros(t_len + 1, dtype=np.int64)
        for j in range(1, t_len + 1):
            # interval (i, j]: best swap value from prefix differences
            vals = f[:j] + (pref[j][None, :] - pref[:j]).max(axis=1)
            best_i = int(np.argmax(vals))
            nf[j] = vals[best_i]
            split[j] = best_i
        np.maximum(nf, f, out=nf)  # allow fewer intervals (value is monotone)
        keep_prev = f >= nf
        f = nf
        if need_comparator:
            split[keep_prev] = -1  # -1 marks "already optimal with fewer parts"
            arg.append(split)

    swap_gain = float(f[t_len])
    comparator = None
    used_parts = 0
    if need_comparator:
        cuts = []
        j = t_len
        level = len(arg) - 1
        while j > 0 and level >= 0:
            if arg[level][j] < 0:
                level -= 1
                continue
            i = int(arg[level][j])
            pair = int(np.argmax(pref[j] - pref[i]))
            cuts.append({"interval": [i + 1, j], "swap": [pair // k, pair % k]})
            j = i
            level -= 1
        cuts.reverse()
        comparator = cuts
        used_parts = len(cuts)

    realized = g.realized_value()
    return RegretReport(
        benchmark=realized + swap_gain,
        realized=realized,
        regret=swap_gain,
        comparator=comparator,
        switches=max(0, used_parts - 1),
        kind="internal",
    )


def internal_batch_benchmark(actions, g: GainMatrix, batches) -> RegretReport:
    """Swap benchmark over a fixed interval partition (the sequence's
    batches): a certified lower bound on the dynamic benchmark, labeled
    ``exact=False``. When the switch budget covers the variation the batch
    partition is feasible, so the bound is usually tight in practice, but
    other partitions may still score higher."""
    actions = np.asarray(actions, dtype=np.int64)
    pref = _swap_prefixes(actions, g.gains)
    k = g.num_actions
    total = 0.0
    cuts = []
    for start, end in batches:
        diff = pref[end] - pref[start - 1]
        pair = int(np.argmax(diff))
        total += float(diff[pair])
        cuts.append({"interval": [start, end], "swap": [pair // k, pair % k]})
    realized = g.realized_value()
    return RegretReport(
        benchmark=realized + total,
        realized=realized,
        regret=total,
        comparator=cuts,
        switches=len(cuts) - 1,
        kind="internal",
        exact=False,
    )


def realized_regret(
    actions,
    seq: GameSequence,
    player: int,
    C: int,
    kind: str = "external",
    method: str = "auto",
    need_comparator: bool = True,
) -> RegretReport:
    """Regret of a realized trace against the requested dynamic benchmark.

    ``actions`` is the full (T, N) joint trace. For the internal benchmark,
    ``method="auto"`` switches from the exact interval DP to the
    batch-aligned partition above ``INTERNAL_EXACT_MAX_T`` periods; the
    report's ``exact`` flag records which one ran.
    """
    actions = np.asarray(actions, dtype=np.int64)
    if actions.shape[0] != seq.horizon:
        raise ValueError(f"trace length {actions.shape[0]} != horizon {seq.horizon}")
    g = GainMatrix.from_trace(seq, actions, player)
    if kind == "external":
        return external_dynamic_benchmark(g, C, need_comparator)
    if kind != "internal":
        raise ValueError(f"unknown benchmark kind {kind!r}")
    own = actions[:, player]
    if method == "exact" or (method == "auto" and seq.horizon <= INTERNAL_EXACT_MAX_T):
        return internal_dynamic_benchmark(own, g, C, need_comparator)
    if method not in ("auto", "batch"):
        raise ValueError(f"unknown method {method!r}")
    return internal_batch_benchmark(own, g, seq.segment_batches())


def clipped_batch_regret(actions, seq: GameSequence, player: int) -> float:
    """Per-batch static-benchmark regret clipped at zero, summed over
    batches; clipping prevents good batches from offsetting bad ones."""
    actions = np.asarray(actions, dtype=np.int64)
    g = GainMatrix.from_trace(seq, actions, player)
    own = actions[:, player]
    rows = np.arange(seq.horizon)
    realized_per_t = g.gains[rows, own]
    total = 0.0
    for start, end in seq.segment_batches():
        sl = slice(start - 1, end)
        best = g.gains[sl].sum(axis=0).max()
        total += max(0.0, float(best - realized_per_t[sl].sum()))
    return total
