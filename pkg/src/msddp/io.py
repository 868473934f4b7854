"""CSV artifacts: trajectories, solve histories, study tables.

All files are UTF-8 with LF line endings, always carry a header row, and
format floats as %.12e.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .trajectory import Trajectory

FLOAT_FMT = "%.12e"

HISTORY_HEADER = [
    "iter", "cost", "defect", "merit", "mu", "alpha", "lambda", "ec1", "ec2", "wall_ms",
]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return FLOAT_FMT % float(value)


def _open_writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = path.open("w", encoding="utf-8", newline="\n")
    return handle, csv.writer(handle, lineterminator="\n")


def write_rows(path, header, rows) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_trajectory(path, traj: Trajectory) -> None:
    """One row per node: k, state, control, defect at node k+1.

    The terminal row carries only the state; its control and defect cells
    are empty.
    """
    n = traj.states.shape[1]
    m = traj.controls.shape[1]
    header = (
        ["k"]
        + [f"x_{i}" for i in range(n)]
        + [f"u_{i}" for i in range(m)]
        + [f"d_{i}" for i in range(n)]
    )
    rows = []
    for k in range(traj.horizon):
        rows.append(
            [k]
            + list(traj.states[k])
            + list(traj.controls[k])
            + list(traj.defects[k])
        )
    rows.append([traj.horizon] + list(traj.states[-1]) + [""] * (m + n))
    write_rows(path, header, rows)


def read_trajectory(path) -> Trajectory:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        n = sum(1 for name in header if name.startswith("x_"))
        m = sum(1 for name in header if name.startswith("u_"))
        states, controls, defects = [], [], []
        for row in reader:
            states.append([float(v) for v in row[1 : 1 + n]])
            if row[1 + n] != "":
                controls.append([float(v) for v in row[1 + n : 1 + n + m]])
                defects.append([float(v) for v in row[1 + n + m :]])
    return Trajectory(np.array(states), np.array(controls), np.array(defects))


def write_history(path, history) -> None:
    rows = [
        [
            rec.iteration, rec.cost, rec.defect_norm, rec.merit, rec.mu,
            rec.alpha, rec.regularization, rec.ec1, rec.ec2, rec.wall_ms,
        ]
        for rec in history
    ]
    write_rows(path, HISTORY_HEADER, rows)
