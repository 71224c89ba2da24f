"""Command-line front end: experiment presets, config ingestion, result
persistence, and plot-ready CSV exports.

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .engine import SimConfig, build_sequence, convergence_sweep
from .games import game_from_json, single_best_reply
from .geometry import JointDistribution, build_polytope, distance, membership
from .learners import resolve_budget
from .presets import build_preset, preset_names
from .welfare import WelfareFunction, beta, best_lambda, poa, welfare_lower_bound, welfare_report


def _jsonable(obj):
    """Recursively coerce numpy scalars and infinities for json.dumps."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj

CSV_COLUMNS = ["T", "batch", "batch_len", "distance", "err_per_T", "regret_p1", "regret_p2", "welfare"]


class ConfigError(ValueError):
    pass


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in preset_names():
                print(name)
            return 0
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        parser.print_help()
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqtrack", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run a preset or a config file")
    run.add_argument("preset", nargs="?", help=f"one of: {', '.join(preset_names())}")
    run.add_argument("--config", help="JSON config or manifest file (alternative to a preset)")
    run.add_argument("--T", type=_parse_int, help="horizon (overrides the grid with a single value)")
    run.add_argument("--grid", help="comma-separated horizon grid, e.g. 1e3,1e4,1e5")
    run.add_argument("--reps", type=int, help="Monte Carlo replications")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--jobs", type=int, default=None, help="parallel workers (default: $EQTRACK_JOBS or 1)")
    run.add_argument("--p-norm", choices=["1", "2", "inf"], default=None)
    run.add_argument("--eq", choices=["hannan", "ce"], default=None)
    run.add_argument("--out", default="results", help="output root directory")
    run.add_argument("--tag", default=None, help="run directory name (default: timestamp)")

    an = sub.add_parser("analyze", help="one-shot polytope / welfare report for a game file")
    an.add_argument("game", help="stage-game JSON document")
    an.add_argument("--q", action="append", default=[], help="distribution to test, e.g. 0,1,0,0 (repeatable)")
    an.add_argument("--eq", choices=["hannan", "ce"], default="hannan")
    an.add_argument("--p-norm", choices=["1", "2", "inf"], default="2")
    an.add_argument("--eps", type=float, default=0.0)
    an.add_argument("--mu", type=float, default=1.0, help="smoothness mu for the lambda frontier")
    an.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    sub.add_parser("list-presets", help="print the available preset names")
    return parser


def _parse_int(text: str) -> int:
    return int(float(text))


def _jobs_default(args) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("EQTRACK_JOBS")
    return int(env) if env else 1


def _load_config_file(path: str) -> tuple[SimConfig, str | None]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    preset = None
    if "config" in doc:  # manifest round-trip
        preset = doc.get("preset")
        doc = doc["config"]
    _validate_config(doc, path)
    return SimConfig.from_json(doc), preset


def _validate_config(doc: dict, where: str) -> None:
    def fail(path, msg):
        raise ConfigError(f"{where}: {path}: {msg}")

    if not isinstance(doc, dict):
        fail("$", "top level must be an object")
    seq = doc.get("sequence")
    if not isinstance(seq, dict) or "kind" not in seq:
        fail("sequence", "must be an object with a 'kind'")
    learners = doc.get("learners")
    if not isinstance(learners, list) or not learners:
        fail("learners", "must be a non-empty list")
    for i, spec in enumerate(learners):
        if not isinstance(spec, dict) or "kind" not in spec:
            fail(f"learners[{i}]", "must be an object with a 'kind'")
    horizons = doc.get("horizons", [10_000])
    if not isinstance(horizons, list) or not all(isinstance(t, (int, float)) for t in horizons):
        fail("horizons", "must be a list of integers")
    if sorted(horizons) != list(horizons):
        fail("horizons", "grid must be sorted ascending")
    reps = doc.get("replications", 50)
    if not isinstance(reps, int) or reps < 1:
        fail("replications", "must be a positive integer")
    if not isinstance(doc.get("metrics", {}), dict):
        fail("metrics", "must be an object")


def _cmd_run(args) -> int:
    jobs = _jobs_default(args)
    grid = None
    if args.grid:
        grid = sorted(_parse_int(tok) for tok in args.grid.split(","))
    if args.T is not None:
        grid = [args.T]

    preset = None
    if args.config:
        config, preset = _load_config_file(args.config)
        if grid:
            config.horizons = grid
        if args.reps:
            config.replications = args.reps
        if args.seed is not None:
            config.seed = args.seed
        config.jobs = jobs
    elif args.preset:
        if args.preset not in preset_names():
            raise ConfigError(f"unknown preset {args.preset!r}; see `eqtrack list-presets`")
        preset = args.preset
        config = build_preset(preset, T=grid, reps=args.reps, seed=args.seed or 0, jobs=jobs)
    else:
        raise ConfigError("give a preset name or --config FILE")

    if args.p_norm and "tracking" in config.metrics:
        config.metrics["tracking"]["p"] = args.p_norm if args.p_norm == "inf" else int(args.p_norm)
    if args.eq and "tracking" in config.metrics:
        config.metrics["tracking"]["kind"] = "correlated" if args.eq == "ce" else "hannan"

    sweep = convergence_sweep(config)

    tag = args.tag or datetime.now(timezone.utc).strftime("run-%Y%m%d-%H%M%S")
    outdir = Path(args.out) / (preset or "config") / tag
    outdir.mkdir(parents=True, exist_ok=True)

    _write_csv(outdir / "summary.csv", sweep)
    report = _report_json(config, sweep)
    if preset == "smooth-welfare-demo":
        report["welfare_bound"] = _welfare_bound_block(config, sweep)
    (outdir / "report.json").write_text(json.dumps(_jsonable(report), indent=2))

    manifest = {
        "preset": preset,
        "config": config.to_json(),
        "config_hash": _hash_config(config),
        "seeds": {
            "root": config.seed,
            "replications": config.replications,
            "scheme": "player i of replication r draws from SeedSequence(root, spawn_key=(r, i))",
        },
        "package_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": ["summary.csv", "report.json"],
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(outdir)
    return 0


def _hash_config(config: SimConfig) -> str:
    blob = json.dumps(config.to_json(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_csv(path: Path, sweep) -> None:
    rows = sweep.rows()
    n_regret = max(len([k for k in row if k.startswith("regret_p")]) for row in rows)
    columns = ["T", "batch", "batch_len", "distance", "err_per_T"]
    columns += [f"regret_p{i + 1}" for i in range(n_regret)]
    columns += ["welfare"]
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col, math.nan)) for col in columns))
    path.write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)  # numpy scalars repr as np.float64(...)
        return "nan" if math.isnan(v) else repr(v)
    return str(int(v))


def _report_json(config: SimConfig, sweep) -> dict:
    per_t = {}
    for T in sweep.horizons:
        s = sweep.summaries[T]
        entry = {
            "batches": [list(b) for b in s.batches],
            "distributions": [d.p.tolist() for d in s.batch_distributions],
            "regret": s.regret,
            "welfare": s.welfare,
        }
        if s.tracking:
            entry["tracking_error"] = s.tracking.error
            entry["err_per_T"] = s.tracking.error / T
            entry["per_batch"] = s.tracking.per_batch
        if s.tracking_alt:
            entry["tracking_mean_of_distances"] = s.tracking_alt
        per_t[str(T)] = entry
    return {"horizons": list(sweep.horizons), "results": per_t}


def _welfare_bound_block(config: SimConfig, sweep) -> dict:
    """Smoothness floor for the realized welfare: lambda*beta/(1+mu) * OPT
    - N/(1+mu) * g, with g the measured worst per-player regret."""
    T = sweep.horizons[-1]
    s = sweep.summaries[T]
    seq = build_sequence(config.sequence, T)
    w = WelfareFunction("additive")
    mu = 1.0
    lam = min(best_lambda(g, w, mu) for g, _ in seq.segments)
    c_t = resolve_budget(config.metrics["external_regret"]["C"], T)
    beta_res = beta(seq, w, c_t)
    ext = s.regret.get("external", {"mean": [0.0], "se": [0.0]})
    g_meas = max(m + 3 * se for m, se in zip(ext["mean"], ext["se"]))
    bound = welfare_lower_bound(lam, mu, beta_res.value, s.welfare["opt_sw"], seq.space.num_players, g_meas)
    return {
        "lambda": lam,
        "mu": mu,
        "beta": beta_res.to_json(),
        "C": c_t,
        "opt_sw": s.welfare["opt_sw"],
        "g_measured": g_meas,
        "bound": bound,
        "realized_welfare": s.welfare["total_mean"],
        "holds": s.welfare["total_mean"] >= bound - 1e-9,
    }


def _cmd_analyze(args) -> int:
    try:
        doc = json.loads(Path(args.game).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.game}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{args.game}: {exc}") from exc
    try:
        game = game_from_json(doc)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{args.game}: {exc}") from exc

    kind = "correlated" if args.eq == "ce" else "hannan"
    p = args.p_norm if args.p_norm == "inf" else int(args.p_norm)
    poly = build_polytope(game, kind, args.eps)
    from .games import GameSequence

    wreport = welfare_report(GameSequence([(game, 1)]), WelfareFunction("additive"), kind, C=0, mu=args.mu)
    wreport["poa_minimum_welfare"] = poa(game, WelfareFunction("minimum"), kind)
    report = {
        "game": {
            "players": game.space.num_players,
            "actions": list(game.space.actions_per_player),
            "bound": game.bound,
            "single_best_reply": single_best_reply(game),
        },
        "polytope": {"kind": kind, "rows": int(poly.rows.shape[0]), "epsilon": args.eps},
        "welfare": _jsonable(wreport),
        "distributions": [],
    }
    for text in args.q:
        vec = np.array([float(tok) for tok in text.split(",")])
        q = JointDistribution(vec)
        rep = distance(q, poly, p)
        report["distributions"].append(
            {
                "q": q.p.tolist(),
                "member": membership(q, poly),
                "distance": rep.value,
                "witness": rep.witness.tolist(),
                "gap_certificate": rep.gap_certificate,
            }
        )
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
