"""Render the benchmark CSV artifacts into figures.

Four figure kinds, one per CSV schema produced by the msddp CLI:

* rate: fitted local-convergence rates on log-log iterate-error axes with
  slope-1 and slope-2 guide lines.
* convergence: cost and total defect against the iteration counter of one
  solve history.
* ec: expected vs actual cost change against the step size.
* penalty: iterations to converge with and without the defect penalty,
  grouped by segment count, with final costs as markers.

Usage: msddp-render <csv> --kind {rate,convergence,ec,penalty} --out <file>
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXIT_OK = 0
EXIT_DATA = 65

FIT_WINDOW = (1e-11, 1e-2)

SCHEMAS = {
    "rate": ["variant", "rollout", "sample", "kappa", "epsilon", "pairs", "excluded"],
    "convergence": ["iter", "cost", "defect", "merit", "mu", "alpha", "lambda", "ec1", "ec2", "wall_ms"],
    "ec": ["alpha", "dj_actual", "ec_exact", "ec_approx"],
    "penalty": ["segments", "penalized", "status", "iterations", "final_cost", "final_defect", "mean_alpha"],
}


class SchemaError(Exception):
    pass


def load_rows(path: Path, kind: str) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [col for col in SCHEMAS[kind] if col not in header]
        if missing:
            raise SchemaError(
                f"{path} does not match the {kind!r} schema; missing columns: "
                + ", ".join(missing)
            )
        return list(reader)


def render_rate(rows: list[dict], ax) -> None:
    lo, hi = FIT_WINDOW
    styles = {
        ("ms-ddp", "nonlinear"): ("tab:red", "full Hessian, nonlinear roll-out"),
        ("ms-ddp", "hybrid"): ("tab:orange", "full Hessian, hybrid roll-out"),
        ("ms-ilqr", "nonlinear"): ("tab:blue", "Gauss-Newton, nonlinear roll-out"),
        ("ms-ilqr", "hybrid"): ("tab:cyan", "Gauss-Newton, hybrid roll-out"),
    }
    seen = set()
    import numpy as np

    grid = np.geomspace(lo, hi, 64)
    for row in rows:
        if row["excluded"] not in ("0", "", "False"):
            continue
        key = (row["variant"], row["rollout"])
        color, label = styles.get(key, ("gray", f"{key[0]}/{key[1]}"))
        kappa = float(row["kappa"])
        epsilon = float(row["epsilon"])
        ax.plot(
            grid,
            kappa * grid**epsilon,
            color=color,
            alpha=0.25,
            linewidth=0.8,
            label=label if key not in seen else None,
        )
        seen.add(key)
    ax.plot(grid, grid, "k--", linewidth=1.2, label="slope 1 (linear)")
    ax.plot(grid, grid**2, "k-.", linewidth=1.2, label="slope 2 (quadratic)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlim(lo, hi)
    ax.set_ylim(1e-16, 1.0)
    ax.set_xlabel("iterate error $e_j$")
    ax.set_ylabel("next iterate error $e_{j+1}$")
    ax.set_title("fitted local convergence rates")
    ax.legend(loc="upper left", fontsize=8)


def render_convergence(rows: list[dict], ax) -> None:
    iters = [int(float(r["iter"])) for r in rows]
    cost = [float(r["cost"]) for r in rows]
    defect = [float(r["defect"]) for r in rows]
    ax.plot(iters, cost, "tab:blue", marker="o", markersize=3, label="cost")
    ax.set_xlabel("iteration")
    ax.set_ylabel("cost", color="tab:blue")
    ax.set_yscale("log" if all(c > 0 for c in cost) else "linear")
    twin = ax.twinx()
    floor = 1e-16
    twin.plot(
        iters, [max(d, floor) for d in defect],
        "tab:red", marker="s", markersize=3, label="total defect",
    )
    twin.set_yscale("log")
    twin.set_ylabel("total defect", color="tab:red")
    ax.set_title("solve history")


def render_ec(rows: list[dict], ax) -> None:
    alpha = [float(r["alpha"]) for r in rows]
    actual = [float(r["dj_actual"]) for r in rows]
    exact = [float(r["ec_exact"]) for r in rows]
    approx = [float(r["ec_approx"]) for r in rows]
    ax.plot(alpha, actual, "k-", marker="o", markersize=3, label="actual cost change")
    ax.plot(alpha, exact, "tab:green", marker="^", markersize=3, label="exact model")
    ax.plot(alpha, approx, "tab:purple", marker="v", markersize=3, label="approximate model")
    ax.axhline(0.0, color="gray", linewidth=0.6)
    ax.set_xlabel("step size")
    ax.set_ylabel("cost change")
    ax.set_title("expected vs actual cost change")
    ax.legend(fontsize=8)


def render_penalty(rows: list[dict], ax) -> None:
    data = defaultdict(dict)
    for row in rows:
        if row["status"] == "skipped_not_divisor":
            continue
        data[int(float(row["segments"]))][int(float(row["penalized"]))] = row
    segments = sorted(data)
    width = 0.35
    for offset, penalized, color, label in (
        (-width / 2, 0, "tab:blue", "no penalty"),
        (width / 2, 1, "tab:orange", "penalized"),
    ):
        xs, ys, costs = [], [], []
        for i, m in enumerate(segments):
            row = data[m].get(penalized)
            if row is None:
                continue
            xs.append(i + offset)
            ys.append(int(float(row["iterations"])))
            costs.append(float(row["final_cost"]) if row["final_cost"] else float("nan"))
        ax.bar(xs, ys, width=width, color=color, label=label)
        for x, y, c in zip(xs, ys, costs):
            ax.annotate(f"{c:.4g}", (x, y), ha="center", va="bottom", fontsize=6, rotation=90)
    ax.set_xticks(range(len(segments)))
    ax.set_xticklabels([str(m) for m in segments])
    ax.set_xlabel("shooting segments")
    ax.set_ylabel("iterations to converge")
    ax.set_title("defect penalty ablation (labels: final cost)")
    ax.legend(fontsize=8)


RENDERERS = {
    "rate": render_rate,
    "convergence": render_convergence,
    "ec": render_ec,
    "penalty": render_penalty,
}


def render(input_csv, kind: str, output_image) -> int:
    """Render one CSV into one image; returns a process exit code."""
    path = Path(input_csv)
    if not path.exists():
        print(f"input not found: {path}", file=sys.stderr)
        return EXIT_DATA
    try:
        rows = load_rows(path, kind)
    except SchemaError as err:
        print(str(err), file=sys.stderr)
        return EXIT_DATA
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=130)
    if kind == "rate" or rows:
        RENDERERS[kind](rows, ax)
    else:
        ax.set_title(f"{kind}: no data")
    fig.tight_layout()
    out = Path(output_image)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="msddp-render", description="Render msddp benchmark CSVs into figures"
    )
    parser.add_argument("csv", help="input CSV file")
    parser.add_argument("--kind", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--out", required=True, help="output image file")
    args = parser.parse_args(argv)
    return render(args.csv, args.kind, args.out)


if __name__ == "__main__":
    sys.exit(main())
