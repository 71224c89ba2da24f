"""Named experiment presets: stable configurations that the CLI can run at
any desk scale. Preset names are part of the public interface (golden
outputs are keyed by them), so they never change."""

from __future__ import annotations

from .engine import SimConfig

__all__ = ["PRESETS", "preset_names", "build_preset"]


def _pricing_pair(learner_spec, T, reps, seed, jobs):
    return SimConfig(
        sequence={"kind": "example1"},
        learners=[dict(learner_spec), dict(learner_spec)],
        replications=reps,
        seed=seed,
        horizons=T,
        metrics={"tracking": {"kind": "hannan", "p": 2}},
        jobs=jobs,
    )


def example1_exp3(T, reps, seed, jobs):
    """Both sellers run classic Exp3: first half converges, second half
    lags (the distance plateaus instead of vanishing)."""
    return _pricing_pair({"kind": "exp3", "tuning": "fig1"}, T, reps, seed, jobs)


def example1_exp3s(T, reps, seed, jobs):
    """Both sellers run Exp3S with the sharing tuning: both halves track
    their equilibrium."""
    return _pricing_pair({"kind": "exp3s", "tuning": "fig2"}, T, reps, seed, jobs)


def lagging_learner(T, reps, seed, jobs):
    """Exp3 against a scripted opponent that always plays the per-batch
    dominant price: the lagging learner keeps the tracking error linear."""
    cfg = _pricing_pair({"kind": "exp3", "tuning": "fig1"}, T, reps, seed, jobs)
    cfg.learners[1] = {"kind": "scripted", "schedule": "dominant"}
    return cfg


def deterministic_inertia(T, reps, seed, jobs):
    """Deterministic two-phase counterexample: scripted play that is
    benchmark-consistent for one switch yet ends the horizon glued to the
    wrong row, so the second batch sits at full distance."""
    quarter = [{"until_frac": 0.25, "action": 0}, {"action": 1}]
    return SimConfig(
        sequence={"kind": "inertia_trap", "eps": 0.1},
        learners=[
            {"kind": "scripted", "fraction_segments": quarter},
            {"kind": "scripted", "fraction_segments": quarter},
        ],
        replications=1,
        seed=seed,
        horizons=T if isinstance(T, list) else [T],
        metrics={"tracking": {"kind": "hannan", "p": 2}, "external_regret": {"C": 1}},
        jobs=jobs,
    )


def trigger_demo(T, reps, seed, jobs):
    """All players trigger-typed on the uniform correlated target of
    matching pennies; whole cycles reproduce the target exactly."""
    return SimConfig(
        sequence={"kind": "matching_pennies"},
        learners=[
            {"kind": "trigger", "masses": {"0": 1, "1": 1, "2": 1, "3": 1}, "denom": 4},
            {"kind": "trigger", "masses": {"0": 1, "1": 1, "2": 1, "3": 1}, "denom": 4},
        ],
        replications=reps,
        seed=seed,
        horizons=T if isinstance(T, list) else [T],
        metrics={"tracking": {"kind": "hannan", "p": 1}},
        jobs=jobs,
    )


def rexp3p_demo(T, reps, seed, jobs):
    """Doubling-trick learner against a scripted switching opponent;
    reports dynamic regret with the budget C_T = ceil(T^0.3)."""
    horizons = T if isinstance(T, list) else [T]
    return SimConfig(
        sequence={"kind": "matching_pennies"},
        learners=[
            {"kind": "rexp3p", "C": {"power": 0.3}},
            {"kind": "scripted", "schedule": "phase_cycle", "phases": 5},
        ],
        replications=reps,
        seed=seed,
        horizons=horizons,
        metrics={"external_regret": {"C": {"power": 0.3}}},
        jobs=jobs,
    )


def smooth_welfare_demo(T, reps, seed, jobs):
    """Restarted Exp3 pair on the two-batch pricing season; the run report
    carries the smoothness-based welfare floor next to realized welfare."""
    return SimConfig(
        sequence={"kind": "example1"},
        learners=[
            {"kind": "restart", "inner": {"kind": "exp3", "tuning": "fig1"}, "C": 1},
            {"kind": "restart", "inner": {"kind": "exp3", "tuning": "fig1"}, "C": 1},
        ],
        replications=reps,
        seed=seed,
        horizons=T if isinstance(T, list) else [T],
        metrics={
            "tracking": {"kind": "hannan", "p": 2},
            "external_regret": {"C": 1},
            "welfare": {"kind": "additive"},
        },
        jobs=jobs,
    )


PRESETS = {
    "example1-exp3": (example1_exp3, {"T": [1000, 10_000], "reps": 50}),
    "example1-exp3s": (example1_exp3s, {"T": [1000, 10_000], "reps": 50}),
    "appendixB3": (lagging_learner, {"T": [1000, 10_000], "reps": 50}),
    "appendixE": (deterministic_inertia, {"T": [1000, 10_000], "reps": 1}),
    "trigger-demo": (trigger_demo, {"T": [2400], "reps": 8}),
    "rexp3p-demo": (rexp3p_demo, {"T": [1024, 8192], "reps": 20}),
    "smooth-welfare-demo": (smooth_welfare_demo, {"T": [10_000], "reps": 30}),
}


def preset_names() -> list[str]:
    return list(PRESETS)


def build_preset(name: str, T=None, reps=None, seed: int = 0, jobs: int = 1) -> SimConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    fn, defaults = PRESETS[name]
    horizons = T if T is not None else defaults["T"]
    if not isinstance(horizons, list):
        horizons = [horizons]
    return fn(horizons, reps if reps is not None else defaults["reps"], seed, jobs)
