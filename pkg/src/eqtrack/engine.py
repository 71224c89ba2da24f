"""Deterministic seeded episode playback, Monte Carlo replication, and
aggregation into empirical distributions, regrets, tracking errors, and
welfare series.

Randomness layout: replication ``r`` of a run with root seed ``s`` gives
player ``i`` the uniform stream ``SeedSequence(s, spawn_key=(r, i))``, with
exactly one uniform consumed per period. Action draws therefore depend only
on ``(seed, replication, player, period)``, never on execution order or
worker count; payoff-noise draws use the extra stream ``(r, N)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import games as G
from .games import GameSequence
from .geometry import JointDistribution, TrackingReport, build_polytope, distance, tracking_error
from .learners import build_learner, resolve_budget
from .regret import clipped_batch_regret, realized_regret
from .welfare import WelfareFunction, optimal_welfare, welfare_table

__all__ = [
    "SimConfig",
    "RunTrace",
    "ReplicationSummary",
    "SweepResult",
    "build_sequence",
    "make_learners",
    "play_episode",
    "monte_carlo",
    "convergence_sweep",
]


@dataclass
class SimConfig:
    """Declarative description of a Monte Carlo experiment; everything needed
    to re-run it lives in plain JSON-able fields."""

    sequence: dict
    learners: list
    replications: int = 50
    seed: int = 0
    horizons: list = field(default_factory=lambda: [10_000])
    metrics: dict = field(default_factory=dict)
    jobs: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not self.horizons:
            raise ValueError("horizon grid must be non-empty")
        if sorted(self.horizons) != list(self.horizons):
            raise ValueError("horizon grid must be sorted ascending")

    def to_json(self) -> dict:
        return {
            "sequence": self.sequence,
            "learners": self.learners,
            "replications": self.replications,
            "seed": self.seed,
            "horizons": list(self.horizons),
            "metrics": self.metrics,
            "jobs": self.jobs,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SimConfig":
        return cls(
            sequence=doc["sequence"],
            learners=list(doc["learners"]),
            replications=int(doc.get("replications", 50)),
            seed=int(doc.get("seed", 0)),
            horizons=[int(t) for t in doc.get("horizons", [10_000])],
            metrics=dict(doc.get("metrics", {})),
            jobs=int(doc.get("jobs", 1)),
        )


def build_sequence(spec: dict, T: int) -> GameSequence:
    """Materialize a sequence spec at horizon ``T``."""
    kind = spec.get("kind", "inline")
    if kind == "example1":
        return G.pricing_season_sequence(
            T,
            alpha=spec.get("alpha", 4.0),
            beta_first=spec.get("beta_first", 0.75),
            beta_second=spec.get("beta_second", 1.75),
            customers=spec.get("customers", 1.0),
            prices=spec.get("prices", (1.0, 2.0)),
        )
    if kind == "inertia_trap":
        return G.inertia_trap_sequence(T, eps=spec.get("eps", 0.1))
    if kind == "constant":
        return GameSequence([(G.game_from_json(spec["game"]), T)])
    if kind == "matching_pennies":
        return GameSequence([(G.matching_pennies(spec.get("stake", 1.0)), T)])
    if kind == "two_phase":
        first = int(round(spec.get("first_fraction", 0.5) * T))
        first = min(max(first, 1), T - 1)
        g1 = G.game_from_json(spec["games"][0])
        g2 = G.game_from_json(spec["games"][1])
        return GameSequence([(g1, first), (g2, T - first)])
    if kind == "inline":
        seq = G.sequence_from_json(spec["doc"])
        if seq.horizon != T:
            raise ValueError(f"inline sequence has horizon {seq.horizon}, requested {T}")
        return seq
    raise ValueError(f"unknown sequence kind {kind!r}")


def make_learners(specs, seq: GameSequence, T: int):
    if len(specs) != seq.space.num_players:
        raise ValueError(
            f"need one learner per player: got {len(specs)} specs for {seq.space.num_players} players"
        )
    game0 = seq.segments[0][0]
    out = []
    for i, spec in enumerate(specs):
        spec = dict(spec)
        spec.setdefault("player", i)
        k = seq.space.actions_per_player[i]
        if spec["kind"] == "scripted":
            spec = _resolve_script(spec, seq, i, T)
            if spec is None:
                out.append(_dominant_script(seq, i))
                continue
        out.append(build_learner(spec, k, seq.bound, T, game0))
    return out


def _resolve_script(spec: dict, seq: GameSequence, player: int, T: int) -> dict | None:
    """Expand horizon-relative scripted schedules into explicit segments;
    returns None for the per-batch dominant-action schedule (built
    directly from the sequence)."""
    if spec.get("schedule") == "dominant":
        return None
    if "fraction_segments" in spec:
        segs = []
        for s in spec["fraction_segments"]:
            until = math.ceil(float(s["until_frac"]) * T) if "until_frac" in s else T
            segs.append({"until": until, "action": int(s["action"])})
        segs[-1]["until"] = T
        return {"kind": "scripted", "segments": segs}
    if spec.get("schedule") == "phase_cycle":
        phases = int(spec["phases"])
        actions = spec.get("actions")
        k = seq.space.actions_per_player[player]
        if actions is None:
            actions = list(range(k))
        segs = [
            {"until": math.ceil((j + 1) * T / phases), "action": int(actions[j % len(actions)])}
            for j in range(phases)
        ]
        return {"kind": "scripted", "segments": segs}
    return spec


def _dominant_script(seq: GameSequence, player: int):
    """Scripted policy playing the per-batch single best reply."""
    from .learners import ScriptedPolicy

    actions = []
    for (start, end), (g, _) in zip(seq.segment_batches(), seq.segments):
        a = G.single_best_reply(g)[player]
        if a is None:
            raise ValueError(f"segment starting at {start} has no single best reply for player {player}")
        actions.append((end, a))

    def sched(t, table=tuple(actions)):
        for end, a in table:
            if t <= end:
                return a
        return table[-1][1]

    return ScriptedPolicy(seq.space.actions_per_player[player], sched)


@dataclass
class RunTrace:
    actions: np.ndarray                 # (T, N) realized joint outcomes
    payoffs: np.ndarray                 # (T, N) realized (possibly noisy) payoffs
    probs: list | None                  # per-period per-player mixed actions
    seed: int
    replication: int


def _player_uniforms(seed: int, rep: int, player: int, T: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(rep, player))
    return np.random.default_rng(ss).random(T)


def _noise_draws(seed: int, rep: int, n_players: int, seq: GameSequence) -> np.ndarray | None:
    if seq.noise is None:
        return None
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(rep, n_players))
    rng = np.random.default_rng(ss)
    draws = np.zeros(seq.horizon)
    for (start, end), nz in zip(seq.segment_batches(), seq.noise):
        if nz is not None:
            draws[start - 1 : end] = nz.sample(rng, end - start + 1)
    return draws


def _episode(
    seq: GameSequence,
    learners,
    T: int,
    seed: int,
    rep: int,
    record_actions: bool,
    record_payoffs: bool,
    record_probs: bool,
    validate: bool,
):
    """One seeded episode. Returns (per-batch outcome counts, actions,
    payoffs, probs); the latter three are None unless requested."""
    space = seq.space
    n = space.num_players
    ks = space.actions_per_player
    if T != seq.horizon:
        raise ValueError(f"episode horizon {T} != sequence horizon {seq.horizon}")
    for lrn in learners:
        lrn.reset()

    uniforms = [_player_uniforms(seed, rep, i, T) for i in range(n)]
    noise = _noise_draws(seed, rep, n, seq)
    bound = seq.bound

    seg_ends = [end for _, end in seq.segment_batches()]
    pay_tables = [g.payoffs.tolist() for g, _ in seq.segments]
    counts = [[0] * space.outcome_count for _ in seq.segments]

    actions_out = [] if record_actions else None
    payoffs_out = [] if record_payoffs else None
    probs_out = [] if record_probs else None

    seg = 0
    seg_end = seg_ends[0]
    pays = pay_tables[0]
    row = counts[0]
    acts = [0] * n

    for t in range(1, T + 1):
        if t > seg_end:
            seg += 1
            seg_end = seg_ends[seg]
            pays = pay_tables[seg]
            row = counts[seg]
        idx = 0
        if record_probs:
            probs_out.append([])
        for i in range(n):
            probs = learners[i].act(t)
            if validate:
                _check_probs(probs, ks[i], i, t)
            if record_probs:
                probs_out[-1].append(list(probs))
            u = uniforms[i][t - 1]
            acc = 0.0
            a = ks[i] - 1
            for j, pj in enumerate(probs):
                acc += pj
                if u < acc:
                    a = j
                    break
            acts[i] = a
            idx = idx * ks[i] + a
        eps_t = noise[t - 1] if noise is not None else 0.0
        pay_row = [0.0] * n if record_payoffs else None
        for i in range(n):
            pay = pays[i][idx]
            if noise is not None:
                pay = min(bound, max(-bound, pay + eps_t))
            learners[i].observe(t, acts[i], pay)
            if record_payoffs:
                pay_row[i] = pay
        if record_payoffs:
            payoffs_out.append(pay_row)
        if record_actions:
            actions_out.append(tuple(acts))
        row[idx] += 1

    return counts, actions_out, payoffs_out, probs_out


def _check_probs(probs, k, player, t):
    if len(probs) != k:
        raise RuntimeError(f"player {player} emitted {len(probs)} probabilities at t={t}, expected {k}")
    s = 0.0
    for p in probs:
        if p < 0.0:
            raise RuntimeError(f"player {player} emitted negative probability {p} at t={t}")
        s += p
    if abs(s - 1.0) > 1e-12:
        raise RuntimeError(f"player {player} probabilities sum to {s} at t={t}")


def play_episode(seq: GameSequence, learners, seed: int = 0, rep: int = 0, record_probs: bool = True,
                 validate: bool = False) -> RunTrace:
    """Play one full episode and return its trace; learners are reset first
    and the result is a deterministic function of (sequence, learner specs,
    seed, rep)."""
    counts, actions, payoffs, probs = _episode(
        seq, learners, seq.horizon, seed, rep,
        record_actions=True, record_payoffs=True, record_probs=record_probs, validate=validate,
    )
    return RunTrace(
        actions=np.array(actions, dtype=np.int64),
        payoffs=np.array(payoffs),
        probs=probs,
        seed=seed,
        replication=rep,
    )


@dataclass
class ReplicationSummary:
    horizon: int
    replications: int
    seed: int
    n_players: int
    batches: list
    batch_counts: np.ndarray
    batch_distributions: list
    tracking: TrackingReport | None = None
    tracking_alt: dict | None = None
    regret: dict = field(default_factory=dict)
    welfare: dict | None = None

    @property
    def err_per_period(self) -> float | None:
        return None if self.tracking is None else self.tracking.error / self.horizon


def _rep_metrics(config_doc: dict, T: int, rep: int) -> dict:
    """Everything a single replication contributes, as plain data."""
    config = SimConfig.from_json(config_doc)
    seq = build_sequence(config.sequence, T)
    learners = make_learners(config.learners, seq, T)
    metrics = config.metrics
    need_actions = bool(
        metrics.get("external_regret") or metrics.get("internal_regret") or metrics.get("clipped_regret")
    )
    counts, actions, _, _ = _episode(
        seq, learners, T, config.seed, rep,
        record_actions=need_actions, record_payoffs=False, record_probs=False, validate=False,
    )
    out: dict = {"counts": counts}
    if need_actions:
        acts = np.array(actions, dtype=np.int64)
        n = seq.space.num_players
        if metrics.get("external_regret"):
            c_t = resolve_budget(metrics["external_regret"]["C"], T)
            out["external"] = [
                realized_regret(acts, seq, i, c_t, "external", need_comparator=False).regret
                for i in range(n)
            ]
        if metrics.get("internal_regret"):
            spec = metrics["internal_regret"]
            c_t = resolve_budget(spec["C"], T)
            out["internal"] = [
                realized_regret(acts, seq, i, c_t, "internal", method=spec.get("method", "auto"),
                                need_comparator=False).regret
                for i in range(n)
            ]
        if metrics.get("clipped_regret"):
            out["clipped"] = [clipped_batch_regret(acts, seq, i) for i in range(n)]
    return out


def monte_carlo(config: SimConfig, T: int | None = None) -> ReplicationSummary:
    """Run seeded replications and aggregate.

    Per-batch empirical distributions are averaged across replications
    before any distance is evaluated (the estimate of the expected
    distribution of play); per-replication distances are additionally
    reported when ``metrics.mean_of_distances`` is set. Aggregation reduces
    buffered per-replication results in replication order, so the output is
    identical for any worker count.
    """
    T = int(T if T is not None else config.horizons[0])
    doc = config.to_json()
    reps = config.replications

    results: list[dict | None] = [None] * reps
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futs = {pool.submit(_rep_metrics, doc, T, r): r for r in range(reps)}
            for fut, r in futs.items():
                results[r] = fut.result()
    else:
        for r in range(reps):
            results[r] = _rep_metrics(doc, T, r)

    seq = build_sequence(config.sequence, T)
    batches = seq.segment_batches()
    z = seq.space.outcome_count
    n = seq.space.num_players

    total_counts = np.zeros((len(batches), z), dtype=np.int64)
    for res in results:
        total_counts += np.asarray(res["counts"], dtype=np.int64)

    batch_dists = []
    for k, (start, end) in enumerate(batches):
        batch_dists.append(JointDistribution.from_counts(total_counts[k], reps * (end - start + 1)))

    summary = ReplicationSummary(
        horizon=T,
        replications=reps,
        seed=config.seed,
        n_players=n,
        batches=batches,
        batch_counts=total_counts,
        batch_distributions=batch_dists,
    )

    metrics = config.metrics
    if metrics.get("tracking"):
        spec = metrics["tracking"]
        kind = spec.get("kind", "hannan")
        p = _parse_norm(spec.get("p", 2))
        summary.tracking = tracking_error(seq, batch_dists, kind=kind, p=p,
                                          epsilon=spec.get("epsilon", 0.0))
        if metrics.get("mean_of_distances"):
            summary.tracking_alt = _mean_of_distances(seq, results, batches, kind, p, reps)

    for key in ("external", "internal", "clipped"):
        vals = [res[key] for res in results if key in res]
        if vals:
            arr = np.array(vals)  # (reps, players)
            entry = {
                "mean": arr.mean(axis=0).tolist(),
                "se": (arr.std(axis=0, ddof=1) / math.sqrt(reps)).tolist() if reps > 1 else [0.0] * n,
            }
            if key in ("external", "internal"):
                entry["C"] = resolve_budget(metrics[f"{key}_regret"]["C"], T)
            summary.regret[key] = entry

    if metrics.get("welfare"):
        summary.welfare = _welfare_summary(seq, metrics["welfare"], results, batches, reps)

    return summary


def _parse_norm(p):
    if p in ("inf", np.inf, math.inf):
        return math.inf
    return int(p)


def _mean_of_distances(seq, results, batches, kind, p, reps):
    """Jensen-gap alternative: distance of each replication's own batch
    distribution, then averaged."""
    per_rep = np.zeros((reps, len(batches)))
    polys = [build_polytope(g, kind, 0.0) for g, _ in seq.segments]
    for r, res in enumerate(results):
        for k, (start, end) in enumerate(batches):
            d = JointDistribution.from_counts(np.asarray(res["counts"][k]), end - start + 1)
            per_rep[r, k] = distance(d, polys[k], p).value
    return {
        "mean": per_rep.mean(axis=0).tolist(),
        "se": (per_rep.std(axis=0, ddof=1) / math.sqrt(reps)).tolist() if reps > 1 else [0.0] * len(batches),
    }


def _welfare_summary(seq, spec, results, batches, reps):
    w = WelfareFunction(spec.get("kind", "additive"), tuple(spec["table"]) if "table" in spec else None)
    tables = [welfare_table(g, w).values for g, _ in seq.segments]
    per_rep_total = np.zeros(reps)
    per_batch = np.zeros((reps, len(batches)))
    for r, res in enumerate(results):
        for k in range(len(batches)):
            val = float(np.asarray(res["counts"][k], dtype=float) @ tables[k])
            per_batch[r, k] = val
            per_rep_total[r] += val
    return {
        "kind": w.kind,
        "opt_sw": optimal_welfare(seq, w),
        "total_mean": float(per_rep_total.mean()),
        "total_se": float(per_rep_total.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
        "per_batch_mean": per_batch.mean(axis=0).tolist(),
    }


@dataclass
class SweepResult:
    horizons: list
    summaries: dict

    def rows(self) -> list[dict]:
        """Flat per-(T, batch) rows for CSV export and trend reading."""
        out = []
        for T in self.horizons:
            s = self.summaries[T]
            err = s.tracking.error if s.tracking else None
            ext = s.regret.get("external")
            for k, (start, end) in enumerate(s.batches):
                row = {
                    "T": T,
                    "batch": k,
                    "batch_len": end - start + 1,
                    "distance": s.tracking.per_batch[k]["distance"] if s.tracking else math.nan,
                    "err_per_T": err / T if err is not None else math.nan,
                }
                for i in range(s.n_players):
                    row[f"regret_p{i + 1}"] = ext["mean"][i] if ext else math.nan
                row["welfare"] = s.welfare["per_batch_mean"][k] if s.welfare else math.nan
                out.append(row)
        return out


def convergence_sweep(config: SimConfig) -> SweepResult:
    """monte_carlo at every horizon in the grid; per-T summaries carry
    err/T and regret/T columns for trend analysis."""
    summaries = {}
    for T in config.horizons:
        summaries[T] = monte_carlo(config, T)
    return SweepResult(horizons=list(config.horizons), summaries=summaries)
