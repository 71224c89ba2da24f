"""Equilibrium polytopes on the outcome simplex, distances to them, and the
tracking-error metric.

Two constraint families are supported, both of the form
``{q in simplex : R q <= eps}``:

* ``hannan`` rows, one per (player, deviation action):
  ``row[a] = u^i(x, a^{-i}) - u^i(a)``;
* ``correlated`` rows, one per (player, x, y):
  ``row[a] = 1(a^i = x) (u^i(y, a^{-i}) - u^i(x, a^{-i}))``.

Distances use the p-norm: exact LP reformulations for p in {1, inf} and
Frank-Wolfe with away steps (LP linear-minimization oracle, certified duality
gap) for p = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .games import GameSequence, StageGame
from .simplex import LPInfeasible, solve_lp

__all__ = [
    "JointDistribution",
    "EquilibriumPolytope",
    "DistanceReport",
    "TrackingReport",
    "build_polytope",
    "membership",
    "distance",
    "tracking_error",
    "regret_to_distance_bound",
]

FW_GAP_TOL = 1e-8
FW_MAX_ITER = 100_000


class JointDistribution:
    """Probability vector over outcomes in lexicographic order.

    Entries in [-1e-12, 0) are clamped to zero and the vector is
    renormalized when its sum is within 1e-9 of one; anything worse is
    rejected.
    """

    __slots__ = ("p",)

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float).copy()
        if p.ndim != 1:
            raise ValueError("distribution must be a flat vector")
        if np.min(p) < -1e-12:
            raise ValueError(f"negative probability mass {np.min(p)}")
        np.clip(p, 0.0, None, out=p)
        s = p.sum()
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {s}, not 1")
        if s != 1.0:
            p /= s
        p.setflags(write=False)
        self.p = p

    def __len__(self):
        return self.p.shape[0]

    def __getitem__(self, i):
        return float(self.p[i])

    @classmethod
    def point_mass(cls, size: int, index: int) -> "JointDistribution":
        p = np.zeros(size)
        p[index] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, size: int) -> "JointDistribution":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def from_counts(cls, counts, total=None) -> "JointDistribution":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum() if total is None else float(total)
        return cls(counts / total)

    def __repr__(self):
        return f"JointDistribution({np.array2string(self.p, precision=4)})"


@dataclass
class EquilibriumPolytope:
    """Linear-constraint form ``{q in simplex : rows @ q <= epsilon}``."""

    rows: np.ndarray
    epsilon: float
    kind: str
    game: StageGame
    labels: list[tuple] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.rows.shape[1]

    def violations(self, q: np.ndarray) -> np.ndarray:
        return self.rows @ q - self.epsilon

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "epsilon": self.epsilon,
            "rows": self.rows.tolist(),
            "labels": [list(l) for l in self.labels],
        }


def _hannan_rows(game: StageGame):
    space = game.space
    z = space.outcome_count
    rows, labels = [], []
    for i in range(space.num_players):
        for x in range(space.actions_per_player[i]):
            row = np.empty(z)
            for a in range(z):
                row[a] = game.payoffs[i, space.replace(a, i, x)] - game.payoffs[i, a]
            rows.append(row)
            labels.append((i, x))
    return np.array(rows), labels


def _correlated_rows(game: StageGame):
    space = game.space
    z = space.outcome_count
    rows, labels = [], []
    for i in range(space.num_players):
        for x in range(space.actions_per_player[i]):
            for y in range(space.actions_per_player[i]):
                row = np.zeros(z)
                for a in range(z):
                    if space.actions_of(a)[i] == x:
                        row[a] = game.payoffs[i, space.replace(a, i, y)] - game.payoffs[i, a]
                rows.append(row)
                labels.append((i, x, y))
    return np.array(rows), labels


def build_polytope(game: StageGame, kind: str = "hannan", epsilon: float = 0.0) -> EquilibriumPolytope:
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if kind == "hannan":
        rows, labels = _hannan_rows(game)
    elif kind in ("correlated", "ce"):
        rows, labels = _correlated_rows(game)
        kind = "correlated"
    else:
        raise ValueError(f"unknown polytope kind {kind!r}")
    poly = EquilibriumPolytope(rows=rows, epsilon=float(epsilon), kind=kind, game=game, labels=labels)
    _assert_nonempty(poly)
    return poly


def _assert_nonempty(poly: EquilibriumPolytope) -> None:
    z = poly.size
    try:
        solve_lp(
            c=np.zeros(z),
            a_ub=poly.rows,
            b_ub=np.full(poly.rows.shape[0], poly.epsilon),
            a_eq=np.ones((1, z)),
            b_eq=np.array([1.0]),
        )
    except LPInfeasible as exc:  # pragma: no cover - the sets are never empty
        raise RuntimeError(
            f"feasibility LP failed for a {poly.kind} polytope; this indicates a solver bug"
        ) from exc


def membership(q, poly: EquilibriumPolytope, tol: float = 1e-9) -> bool:
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    vec = q.p if isinstance(q, JointDistribution) else np.asarray(q, dtype=float)
    if vec.shape[0] != poly.size:
        raise ValueError(f"distribution has size {vec.shape[0]}, polytope expects {poly.size}")
    return bool(np.max(poly.violations(vec)) <= tol)


@dataclass
class DistanceReport:
    value: float
    witness: np.ndarray
    gap_certificate: float
    iterations: int
    p: object

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "witness": self.witness.tolist(),
            "gap_certificate": self.gap_certificate,
            "iterations": self.iterations,
            "p": "inf" if self.p in (np.inf, "inf", math.inf) else self.p,
        }


def _lmo(poly: EquilibriumPolytope, grad: np.ndarray) -> np.ndarray:
    sol = solve_lp(
        c=grad,
        a_ub=poly.rows,
        b_ub=np.full(poly.rows.shape[0], poly.epsilon),
        a_eq=np.ones((1, poly.size)),
        b_eq=np.array([1.0]),
    )
    return sol.x


def _distance_l2_fw(q: np.ndarray, poly: EquilibriumPolytope) -> DistanceReport:
    """Frank-Wolfe with away steps on ||x - q||^2; stops at duality gap
    <= FW_GAP_TOL so the squared distance is certified to that accuracy."""
    x = _lmo(poly, np.zeros(poly.size))
    active: dict[bytes, tuple[np.ndarray, float]] = {x.round(12).tobytes(): (x, 1.0)}
    gap = np.inf
    it = 0
    for it in range(1, FW_MAX_ITER + 1):
        grad = 2.0 * (x - q)
        s = _lmo(poly, grad)
        d_fw = s - x
        gap = float(-grad @ d_fw)
        if gap <= FW_GAP_TOL:
            break
        # away direction over the active set
        away_key = max(active, key=lambda k: float(grad @ active[k][0]))
        v_away, w_away = active[away_key]
        d_away = x - v_away
        if float(grad @ d_fw) <= float(grad @ d_away):
            d, alpha_max, step_kind = d_fw, 1.0, "fw"
        else:
            d, alpha_max, step_kind = d_away, w_away / (1.0 - w_away) if w_away < 1.0 else np.inf, "away"
        dd = float(d @ d)
        if dd <= 0:
            break
        alpha = min(alpha_max, max(0.0, float(-(grad @ d)) / (2.0 * dd)))
        if alpha <= 0:
            break
        x = x + alpha * d
        if step_kind == "fw":
            key = s.round(12).tobytes()
            for k in list(active):
                v, w = active[k]
                active[k] = (v, w * (1.0 - alpha))
            v, w = active.get(key, (s, 0.0))
            active[key] = (v, w + alpha)
        else:
            for k in list(active):
                v, w = active[k]
                active[k] = (v, w * (1.0 + alpha))
            v, w = active[away_key]
            active[away_key] = (v, w - alpha)
        active = {k: vw for k, vw in active.items() if vw[1] > 1e-14}
    return DistanceReport(
        value=float(np.linalg.norm(x - q)),
        witness=x,
        gap_certificate=gap if np.isfinite(gap) else 0.0,
        iterations=it,
        p=2,
    )


def _distance_lp(q: np.ndarray, poly: EquilibriumPolytope, p) -> DistanceReport:
    """Exact LP reformulation for the l1 and l-infinity distances."""
    z = poly.size
    n_aux = z if p == 1 else 1
    n = z + n_aux
    eps_col = np.full(poly.rows.shape[0], poly.epsilon)
    a_ub = [np.concatenate([poly.rows, np.zeros((poly.rows.shape[0], n_aux))], axis=1)]
    b_ub = [eps_col]
    eye = np.eye(z)
    aux = eye if p == 1 else np.ones((z, 1))
    a_ub.append(np.concatenate([eye, -aux], axis=1))   # x - s <= q
    b_ub.append(q)
    a_ub.append(np.concatenate([-eye, -aux], axis=1))  # -x - s <= -q
    b_ub.append(-q)
    c = np.concatenate([np.zeros(z), np.ones(n_aux)])
    a_eq = np.concatenate([np.ones((1, z)), np.zeros((1, n_aux))], axis=1)
    sol = solve_lp(c, np.concatenate(a_ub), np.concatenate(b_ub), a_eq, np.array([1.0]))
    return DistanceReport(
        value=float(sol.value),
        witness=sol.x[:z],
        gap_certificate=0.0,
        iterations=sol.iterations,
        p=p,
    )


def distance(q, poly: EquilibriumPolytope, p=2) -> DistanceReport:
    """p-norm distance from ``q`` to the polytope, with a feasible witness."""
    vec = q.p if isinstance(q, JointDistribution) else np.asarray(q, dtype=float)
    if vec.shape[0] != poly.size:
        raise ValueError(f"distribution has size {vec.shape[0]}, polytope expects {poly.size}")
    if np.max(poly.violations(vec)) <= 0.0:
        return DistanceReport(value=0.0, witness=vec.copy(), gap_certificate=0.0, iterations=0, p=p)
    if p == 2:
        return _distance_l2_fw(vec, poly)
    if p == 1:
        return _distance_lp(vec, poly, 1)
    if p in (np.inf, math.inf, "inf"):
        return _distance_lp(vec, poly, np.inf)
    raise ValueError(f"unsupported norm p={p!r} (use 1, 2 or inf)")


@dataclass
class TrackingReport:
    error: float
    per_batch: list[dict]

    @property
    def per_period(self) -> float:
        total = sum(b["length"] for b in self.per_batch)
        return self.error / total


def tracking_error(
    seq: GameSequence,
    batch_dists,
    kind: str = "hannan",
    p=2,
    epsilon: float = 0.0,
) -> TrackingReport:
    """Batch-length-weighted sum of distances between per-batch empirical
    distributions and the per-batch equilibrium polytopes (built at the
    given epsilon, zero by default)."""
    batches = seq.segment_batches()
    if len(batch_dists) != len(batches):
        raise ValueError(
            f"need one distribution per batch: got {len(batch_dists)}, expected {len(batches)}"
        )
    total = 0.0
    rows = []
    cache: dict[int, EquilibriumPolytope] = {}
    for k, ((start, end), dist_k) in enumerate(zip(batches, batch_dists)):
        game = seq.segments[k][0]
        key = id(game)
        if key not in cache:
            cache[key] = build_polytope(game, kind, epsilon)
        rep = distance(dist_k, cache[key], p)
        length = end - start + 1
        total += length * rep.value
        rows.append({"batch": k, "start": start, "end": end, "length": length, "distance": rep.value})
    return TrackingReport(error=total, per_batch=rows)


@dataclass
class DistanceBoundReport:
    value: float
    const_estimate: float
    cap: float


def regret_to_distance_bound(
    game: StageGame, eps: float, p=2, kind: str = "hannan", probes: int = 32, seed: int = 0
) -> DistanceBoundReport:
    """Empirical version of the regret-to-distance bound
    ``d_p(q, H) <= min(const * eps, 2^(1/p))`` for ``q`` in the
    eps-relaxed polytope.

    The constant is estimated from below by probing vertices of the relaxed
    polytope (coordinate plus seeded random LP objectives) and measuring
    their distance to the tight polytope; the simplex-diameter cap
    ``2^(1/p)`` is exact.
    """
    cap = 2.0 ** (1.0 / p) if p not in (np.inf, math.inf, "inf") else 1.0
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0.0:
        return DistanceBoundReport(value=0.0, const_estimate=0.0, cap=cap)
    tight = build_polytope(game, kind, 0.0)
    relaxed = build_polytope(game, kind, eps)
    z = tight.size
    objectives = [np.eye(z)[i] for i in range(z)] + [-np.eye(z)[i] for i in range(z)]
    rng = np.random.default_rng(seed)
    objectives += [rng.normal(size=z) for _ in range(max(0, probes - len(objectives)))]
    const = 0.0
    for c in objectives:
        v = _lmo(relaxed, c)
        d = distance(v, tight, p).value
        const = max(const, d / eps)
    return DistanceBoundReport(value=min(const * eps, cap), const_estimate=const, cap=cap)
