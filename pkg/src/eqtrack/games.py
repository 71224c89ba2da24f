"""Stage games, horizon sequences, and their variation/batch structure.

Conventions used throughout the package:

* A stage game for ``N`` players with ``K^i`` actions each is a payoff
  tensor ``payoffs[i][a]`` where ``a`` indexes the joint outcome space in
  lexicographic order (player 0 most significant digit).
* A sequence of stage games over a horizon ``T`` is stored run-length
  encoded: maximal contiguous segments during which the game (and the
  optional payoff-noise distribution) stays constant.
* ``variation`` counts the periods at which the game changes between two
  consecutive periods; the ``variation + 1`` maximal constant runs are the
  "batches" used by tracking-error and welfare computations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

__all__ = [
    "ActionSpace",
    "Outcome",
    "StageGame",
    "NoiseSpec",
    "GameSequence",
    "payoff",
    "variation",
    "segment_batches",
    "single_best_reply",
    "is_single_best_reply",
    "make_injective",
    "logit_pricing_game",
    "pricing_season_sequence",
    "matching_pennies",
    "fragile_cce_game",
    "match_column_game",
    "top_row_dominant_game",
    "inertia_trap_sequence",
    "sequence_to_json",
    "sequence_from_json",
    "game_to_json",
    "game_from_json",
]


@dataclass(frozen=True)
class ActionSpace:
    """Joint action space: ``num_players`` players with ``actions_per_player[i]``
    actions each. Outcomes are tuples ``(a^0, ..., a^{N-1})`` ranked
    lexicographically (player 0 most significant)."""

    num_players: int
    actions_per_player: tuple[int, ...]

    def __post_init__(self):
        if self.num_players < 1:
            raise ValueError("need at least one player")
        object.__setattr__(self, "actions_per_player", tuple(int(k) for k in self.actions_per_player))
        if len(self.actions_per_player) != self.num_players:
            raise ValueError("actions_per_player must have one entry per player")
        if any(k < 2 for k in self.actions_per_player):
            raise ValueError("every player needs at least two actions")

    @property
    def outcome_count(self) -> int:
        return math.prod(self.actions_per_player)

    def outcomes(self):
        """Iterate joint action tuples in lexicographic order."""
        return product(*(range(k) for k in self.actions_per_player))

    def index_of(self, actions) -> int:
        """Lexicographic rank of a joint action tuple."""
        idx = 0
        for a, k in zip(actions, self.actions_per_player):
            if not 0 <= a < k:
                raise ValueError(f"action {a} out of range for {k} actions")
            idx = idx * k + a
        return idx

    def actions_of(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index_of`."""
        if not 0 <= index < self.outcome_count:
            raise ValueError(f"outcome index {index} out of range")
        out = []
        for k in reversed(self.actions_per_player):
            out.append(index % k)
            index //= k
        return tuple(reversed(out))

    def replace(self, index: int, player: int, action: int) -> int:
        """Outcome index with ``player``'s coordinate replaced by ``action``."""
        a = list(self.actions_of(index))
        a[player] = action
        return self.index_of(a)

    def opponent_rank(self, index: int, player: int) -> int:
        """Lexicographic rank of the opponents' sub-profile at ``index``."""
        a = self.actions_of(index)
        rank = 0
        for j, k in enumerate(self.actions_per_player):
            if j == player:
                continue
            rank = rank * k + a[j]
        return rank

    def opponent_count(self, player: int) -> int:
        return self.outcome_count // self.actions_per_player[player]


@dataclass(frozen=True)
class Outcome:
    """A joint action profile together with its lexicographic rank."""

    actions: tuple[int, ...]
    index: int

    @classmethod
    def from_actions(cls, space: ActionSpace, actions) -> "Outcome":
        actions = tuple(int(a) for a in actions)
        return cls(actions, space.index_of(actions))

    @classmethod
    def from_index(cls, space: ActionSpace, index: int) -> "Outcome":
        return cls(space.actions_of(index), int(index))


class StageGame:
    """One-shot game: ``payoffs[player][outcome]`` with entries in [-M, M].

    Two games compare equal iff they share the action space and every
    payoff entry is identical (the sup-norm zero test used when counting
    changes along a sequence).
    """

    __slots__ = ("space", "payoffs", "bound")

    def __init__(self, space: ActionSpace, payoffs, bound: float):
        payoffs = np.asarray(payoffs, dtype=float)
        if payoffs.shape != (space.num_players, space.outcome_count):
            raise ValueError(
                f"payoffs must have shape {(space.num_players, space.outcome_count)}, got {payoffs.shape}"
            )
        if not np.all(np.isfinite(payoffs)):
            raise ValueError("payoffs must be finite")
        bound = float(bound)
        if bound <= 0:
            raise ValueError("payoff bound must be positive")
        if np.max(np.abs(payoffs)) > bound + 1e-12:
            raise ValueError("payoff magnitude exceeds the declared bound")
        payoffs = payoffs.copy()
        payoffs.setflags(write=False)
        self.space = space
        self.payoffs = payoffs
        self.bound = bound

    def payoff(self, player: int, outcome) -> float:
        """Payoff of ``player`` at a joint outcome (index, tuple or Outcome)."""
        idx = self._outcome_index(outcome)
        return float(self.payoffs[player, idx])

    def payoff_vs(self, player: int, action: int, outcome) -> float:
        """Payoff of ``player`` when deviating to ``action`` while the
        opponents play their part of ``outcome``."""
        idx = self._outcome_index(outcome)
        return float(self.payoffs[player, self.space.replace(idx, player, action)])

    def _outcome_index(self, outcome) -> int:
        if isinstance(outcome, Outcome):
            return outcome.index
        if isinstance(outcome, (int, np.integer)):
            idx = int(outcome)
            if not 0 <= idx < self.space.outcome_count:
                raise ValueError(f"outcome index {idx} out of range")
            return idx
        return self.space.index_of(outcome)

    def __eq__(self, other):
        if not isinstance(other, StageGame):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.payoffs, other.payoffs)

    def __ne__(self, other):
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    def __hash__(self):
        return hash((self.space, self.payoffs.tobytes()))

    def __repr__(self):
        ks = "x".join(str(k) for k in self.space.actions_per_player)
        return f"StageGame({ks}, M={self.bound})"


@dataclass(frozen=True)
class NoiseSpec:
    """Additive i.i.d. payoff noise; realized payoffs are clipped to [-M, M].

    ``kind`` is ``"gaussian"`` (std = scale) or ``"uniform"`` (on
    [-scale, scale]).
    """

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("noise scale must be non-negative")

    def sample(self, rng, size=None):
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, size)
        return rng.uniform(-self.scale, self.scale, size)


class GameSequence:
    """Horizon-indexed stage games stored as run-length-encoded segments.

    ``segments`` is a list of ``(StageGame, length)`` pairs; adjacent
    segments holding equal games (and equal noise) are merged so the stored
    form is canonical. ``noise`` is ``None``, one :class:`NoiseSpec` for the
    whole horizon, or a per-segment list (entries may be ``None``). A change
    in the noise distribution counts toward the variation even if the mean
    game is unchanged.
    """

    __slots__ = ("segments", "noise", "horizon", "_starts")

    def __init__(self, segments, noise=None):
        segments = [(g, int(n)) for g, n in segments]
        if not segments:
            raise ValueError("sequence needs at least one segment")
        if any(n <= 0 for _, n in segments):
            raise ValueError("segment lengths must be positive")
        for g, _ in segments:
            if g.space != segments[0][0].space:
                raise ValueError("all stage games must share one action space")

        if noise is None or isinstance(noise, NoiseSpec):
            per_seg = [noise] * len(segments)
        else:
            per_seg = list(noise)
            if len(per_seg) != len(segments):
                raise ValueError("per-segment noise list must align with segments")

        merged: list[tuple[StageGame, int]] = []
        merged_noise: list[NoiseSpec | None] = []
        for (g, n), nz in zip(segments, per_seg):
            if merged and merged[-1][0] == g and merged_noise[-1] == nz:
                merged[-1] = (g, merged[-1][1] + n)
            else:
                merged.append((g, n))
                merged_noise.append(nz)

        self.segments = merged
        self.noise = None if all(nz is None for nz in merged_noise) else merged_noise
        self.horizon = sum(n for _, n in merged)
        starts = [1]
        for _, n in merged:
            starts.append(starts[-1] + n)
        self._starts = starts  # starts[k] = first period of segment k (1-based)

    @property
    def space(self) -> ActionSpace:
        return self.segments[0][0].space

    @property
    def bound(self) -> float:
        return max(g.bound for g, _ in self.segments)

    def segment_index(self, t: int) -> int:
        if not 1 <= t <= self.horizon:
            raise ValueError(f"period {t} outside horizon [1, {self.horizon}]")
        lo, hi = 0, len(self.segments) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._starts[mid] <= t:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def game_at(self, t: int) -> StageGame:
        return self.segments[self.segment_index(t)][0]

    def noise_at(self, t: int) -> NoiseSpec | None:
        if self.noise is None:
            return None
        return self.noise[self.segment_index(t)]

    def variation(self) -> int:
        """Number of periods at which the game (or noise law) changes."""
        return len(self.segments) - 1

    def segment_batches(self) -> list[tuple[int, int]]:
        """Maximal constant runs as 1-based inclusive ``(start, end)`` pairs."""
        return [
            (self._starts[k], self._starts[k + 1] - 1)
            for k in range(len(self.segments))
        ]


def payoff(seq: GameSequence, t: int, player: int, outcome) -> float:
    """Mean payoff ``u^i_t(a)``; realized noise draws happen in the engine."""
    game = seq.game_at(t)
    if not 0 <= player < game.space.num_players:
        raise ValueError(f"player {player} out of range")
    return game.payoff(player, outcome)


def variation(seq: GameSequence) -> int:
    return seq.variation()


def segment_batches(seq: GameSequence) -> list[tuple[int, int]]:
    return seq.segment_batches()


def single_best_reply(game: StageGame) -> list[int | None]:
    """Per-player action maximizing the payoff against *every* opponent
    profile simultaneously, or ``None`` for a player with no such action.
    Ties break toward the lowest action index."""
    space = game.space
    out: list[int | None] = []
    for i in range(space.num_players):
        k_i = space.actions_per_player[i]
        best: int | None = None
        for x in range(k_i):
            ok = True
            for a in range(space.outcome_count):
                ux = game.payoffs[i, space.replace(a, i, x)]
                if any(
                    game.payoffs[i, space.replace(a, i, y)] > ux + 0.0
                    for y in range(k_i)
                ):
                    ok = False
                    break
            if ok:
                best = x
                break
        out.append(best)
    return out


def is_single_best_reply(game: StageGame) -> bool:
    return all(a is not None for a in single_best_reply(game))


def make_injective(game: StageGame, player: int) -> StageGame:
    """Positive-affine transform of ``player``'s payoffs making every own-action
    section injective in the opponents' profile.

    Opponent rank ``r`` (0-based lexicographic) receives the offset
    ``-2M + 3M r`` before scaling by ``(3 |A^{-i}| - 1) M``, which places the
    transformed sections in disjoint bands of width ``2M`` separated by gaps
    of ``M``. Per-opponent-profile argmax sets are preserved exactly; other
    players' payoffs are untouched.
    """
    space = game.space
    m = game.bound
    n_opp = space.opponent_count(player)
    alpha = (3 * n_opp - 1) * m
    new = np.array(game.payoffs, dtype=float)
    for a in range(space.outcome_count):
        beta = -2.0 * m + 3.0 * m * space.opponent_rank(a, player)
        new[player, a] = alpha * (game.payoffs[player, a] + beta)
    bound = max(game.bound, float(np.max(np.abs(new))))
    return StageGame(space, new, bound)


def logit_pricing_game(alpha: float, beta: float, customers: float, prices) -> StageGame:
    """Two-seller price competition with logit demand.

    Seller ``i`` posting price ``p`` against an opponent posting ``p'``
    earns ``p * customers * exp(alpha - beta p) /
    (1 + exp(alpha - beta p) + exp(alpha - beta p'))`` (production costs
    normalized to zero). ``M`` is ``customers * max(prices)``.
    """
    prices = [float(p) for p in prices]
    if not prices:
        raise ValueError("prices must be non-empty")
    if beta <= 0:
        raise ValueError("price sensitivity beta must be positive")
    if customers <= 0:
        raise ValueError("customers must be positive")
    space = ActionSpace(2, (len(prices), len(prices)))
    payoffs = np.zeros((2, space.outcome_count))
    for a, (x, y) in enumerate(space.outcomes()):
        p_own, p_opp = prices[x], prices[y]
        e_own = math.exp(alpha - beta * p_own)
        e_opp = math.exp(alpha - beta * p_opp)
        denom = 1.0 + e_own + e_opp
        payoffs[0, a] = p_own * customers * e_own / denom
        payoffs[1, a] = p_opp * customers * e_opp / denom
    return StageGame(space, payoffs, customers * max(prices))


def pricing_season_sequence(
    T: int,
    alpha: float = 4.0,
    beta_first: float = 0.75,
    beta_second: float = 1.75,
    customers: float = 1.0,
    prices=(1.0, 2.0),
) -> GameSequence:
    """Pricing season with one mid-horizon jump in price sensitivity.

    Low sensitivity in the first half makes the high price dominant; the
    jump to high sensitivity makes the low price dominant for the rest.
    """
    if T < 2:
        raise ValueError("horizon must be at least 2")
    g1 = logit_pricing_game(alpha, beta_first, customers, prices)
    g2 = logit_pricing_game(alpha, beta_second, customers, prices)
    half = T // 2
    return GameSequence([(g1, half), (g2, T - half)])


def matching_pennies(stake: float = 1.0) -> StageGame:
    space = ActionSpace(2, (2, 2))
    u0 = np.array([stake, -stake, -stake, stake])
    return StageGame(space, np.stack([u0, -u0]), stake)


def fragile_cce_game(delta: float = 0.1) -> StageGame:
    """2x2 game whose equilibrium polytope is the single vertex on the
    first outcome, while near-equilibrium play can sit a full simplex
    diagonal away: off-diagonal outcomes violate the deviation constraints
    by only ``delta``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    space = ActionSpace(2, (2, 2))
    payoffs = np.array(
        [
            [delta, 1.0, 0.0, 0.0],  # row player on (a,c),(a,d),(b,c),(b,d)
            [delta, 0.0, 1.0, 0.0],
        ]
    )
    return StageGame(space, payoffs, 1.0)


def match_column_game(eps: float = 0.1) -> StageGame:
    """Row earns +1 for matching the column and -1 otherwise; the column
    player is indifferent everywhere (constant ``eps``)."""
    space = ActionSpace(2, (2, 2))
    payoffs = np.array(
        [
            [1.0, -1.0, -1.0, 1.0],
            [eps, eps, eps, eps],
        ]
    )
    return StageGame(space, payoffs, 1.0)


def top_row_dominant_game(eps: float = 0.1) -> StageGame:
    """Row's first action pays +1/4 and the second -1/4 regardless of the
    column; the column player stays indifferent."""
    space = ActionSpace(2, (2, 2))
    payoffs = np.array(
        [
            [0.25, 0.25, -0.25, -0.25],
            [eps, eps, eps, eps],
        ]
    )
    return StageGame(space, payoffs, 1.0)


def inertia_trap_sequence(T: int, eps: float = 0.1) -> GameSequence:
    """Match-the-column game for the first ``2*ceil(T/4)`` periods, then the
    top-row-dominant game: a learner that carried momentum into the switch
    keeps playing the bottom row and tracks nothing."""
    if T < 8:
        raise ValueError("horizon must be at least 8")
    first = 2 * math.ceil(T / 4)
    return GameSequence([(match_column_game(eps), first), (top_row_dominant_game(eps), T - first)])


def _noise_to_json(noise):
    if noise is None:
        return None
    return {"kind": noise.kind, "scale": noise.scale}


def _noise_from_json(doc):
    if doc is None:
        return None
    return NoiseSpec(doc["kind"], float(doc["scale"]))


def sequence_to_json(seq: GameSequence) -> dict:
    """Serialize to ``{players, actions, M, segments: [...], noise?}`` with
    payoffs row-major by player then lexicographic outcome."""
    doc = {
        "players": seq.space.num_players,
        "actions": list(seq.space.actions_per_player),
        "M": seq.bound,
        "segments": [
            {"length": n, "payoffs": g.payoffs.tolist()} for g, n in seq.segments
        ],
    }
    if seq.noise is not None:
        doc["noise"] = [_noise_to_json(nz) for nz in seq.noise]
    return doc


def sequence_from_json(doc: dict) -> GameSequence:
    space = ActionSpace(int(doc["players"]), tuple(doc["actions"]))
    bound = float(doc["M"])
    segments = [
        (StageGame(space, seg["payoffs"], bound), int(seg["length"]))
        for seg in doc["segments"]
    ]
    noise = doc.get("noise")
    if noise is not None:
        if isinstance(noise, dict):
            noise = _noise_from_json(noise)
        else:
            noise = [_noise_from_json(nz) for nz in noise]
    return GameSequence(segments, noise)


def game_to_json(game: StageGame) -> dict:
    return sequence_to_json(GameSequence([(game, 1)]))


def game_from_json(doc: dict) -> StageGame:
    seq = sequence_from_json(doc)
    if len(seq.segments) != 1:
        raise ValueError("expected a single-segment document for a stage game")
    return seq.segments[0][0]


def load_sequence(path) -> GameSequence:
    with open(path) as fh:
        return sequence_from_json(json.load(fh))
