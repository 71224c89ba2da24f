"""Render eqtrack summary CSVs into figures.

Consumes only the published CSV schema (one row per (T, batch) with the
fixed header below); figure kinds:

* ``batch-distance``  - per-batch distance vs T, one series per batch
* ``tracking-error``  - err/T vs T, one series per input file
* ``regret``          - per-player regret vs T

Rendering is pure with respect to CSV content: the plotted data arrays are
a deterministic function of the rows (image bytes may differ by backend).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED_HEADER = [
    "T",
    "batch",
    "batch_len",
    "distance",
    "err_per_T",
    "regret_p1",
    "regret_p2",
    "welfare",
]

KINDS = ("batch-distance", "tracking-error", "regret")


class SchemaError(ValueError):
    """Raised when a CSV header does not match the published schema."""


@dataclass
class PlotSpec:
    inputs: list
    kind: str
    output: str
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise ValueError("need at least one input CSV")


def load_summary(path) -> list[dict]:
    """Parse a summary CSV after validating the header exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != EXPECTED_HEADER:
            missing = [c for c in EXPECTED_HEADER if c not in header]
            unexpected = [c for c in header if c not in EXPECTED_HEADER]
            raise SchemaError(
                f"{path}: header mismatch (missing: {missing or 'none'}, "
                f"unexpected: {unexpected or 'none'}, order must be {EXPECTED_HEADER})"
            )
        rows = []
        for line in reader:
            if not line:
                continue
            rows.append(
                {
                    "T": int(line[0]),
                    "batch": int(line[1]),
                    "batch_len": int(line[2]),
                    "distance": float(line[3]),
                    "err_per_T": float(line[4]),
                    "regret_p1": float(line[5]),
                    "regret_p2": float(line[6]),
                    "welfare": float(line[7]),
                }
            )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def extract_series(rows: list[dict], kind: str, label: str) -> dict:
    """Series dict {name: (x, y)} with x the sorted horizon grid."""
    horizons = sorted({r["T"] for r in rows})
    series = {}
    if kind == "batch-distance":
        for b in sorted({r["batch"] for r in rows}):
            xs, ys = [], []
            for T in horizons:
                match = [r for r in rows if r["T"] == T and r["batch"] == b]
                if match:
                    xs.append(T)
                    ys.append(match[0]["distance"])
            series[f"{label} batch {b + 1}"] = (xs, ys)
    elif kind == "tracking-error":
        xs, ys = [], []
        for T in horizons:
            match = [r for r in rows if r["T"] == T]
            xs.append(T)
            ys.append(match[0]["err_per_T"])
        series[label] = (xs, ys)
    else:  # regret
        for col in ("regret_p1", "regret_p2"):
            xs, ys = [], []
            for T in horizons:
                match = [r for r in rows if r["T"] == T]
                xs.append(T)
                ys.append(match[0][col])
            series[f"{label} {col.replace('regret_p', 'player ')}"] = (xs, ys)
    return series


Y_LABELS = {
    "batch-distance": "distance to equilibrium set",
    "tracking-error": "tracking error / T",
    "regret": "regret",
}


def render(spec: PlotSpec) -> dict:
    """Write the figure and return the plotted series (for testing)."""
    all_series = {}
    for path in spec.inputs:
        rows = load_summary(path)
        label = Path(path).parent.parent.name if Path(path).name == "summary.csv" else Path(path).stem
        all_series.update(extract_series(rows, spec.kind, label))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, (xs, ys) in all_series.items():
        ax.plot(xs, ys, marker="o", label=name)
    xs_all = sorted({x for xs, _ in all_series.values() for x in xs})
    if len(xs_all) >= 2 and xs_all[0] > 0 and xs_all[-1] / xs_all[0] >= 10:
        ax.set_xscale("log")
    ax.set_xlabel("horizon T")
    ax.set_ylabel(Y_LABELS[spec.kind])
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)
    return all_series


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="eqtrack-render", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True, help="summary CSV (repeatable)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        render(PlotSpec(inputs=args.inputs, kind=args.kind, output=args.out, title=args.title))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
