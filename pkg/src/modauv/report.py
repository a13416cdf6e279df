"""Figures rendered from a run's JSONL logs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .deploy.logs import read_log  # noqa: E402


def _series(rows, key):
    return np.array([r[key] for r in rows], dtype=float)


def plot_trajectory(log_dir, path) -> Path:
    header, rows = read_log(Path(log_dir) / "trajectory.jsonl")
    _, caps = read_log(Path(log_dir) / "captures.jsonl")
    obj = (header["config"].get("object") or {}).get("position")
    pos = _series(rows, "pos")
    est = _series(rows, "est_pos")
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(pos[:, 0], pos[:, 1], lw=1.2, label="true")
    ax.plot(est[:, 0], est[:, 1], lw=0.8, ls="--", label="dead reckoning")
    if caps:
        cp = np.array([c["true_position"] for c in caps])
        ax.scatter(cp[:, 0], cp[:, 1], marker="s", s=30, color="C3", zorder=3, label="captures")
    targets = [r["target"] for r in rows if r.get("target")]
    if targets:
        ax.scatter(*targets[-1][:2], marker="x", color="C2", s=60, label="target estimate")
    if obj:
        ax.scatter(obj[0], obj[1], marker="o", facecolors="none", edgecolors="k", s=80, label="object")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{header['scenario']}: trajectory")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_power(log_dir, path) -> Path:
    header, rows = read_log(Path(log_dir) / "power.jsonl")
    t = _series(rows, "t")
    cells = _series(rows, "cells")
    fig, (a1, a2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    for i in range(cells.shape[1]):
        a1.plot(t, cells[:, i], lw=1, label=f"cell {i}")
    a1.set_ylabel("cell [V]")
    a1.legend(loc="best", fontsize=8, ncol=2)
    a2.plot(t, _series(rows, "rail_volts"), lw=1, label="5 V rail [V]")
    a2.plot(t, _series(rows, "pack_amps"), lw=1, label="pack [A]")
    a2.set_xlabel("t [s]")
    a2.legend(loc="best", fontsize=8)
    a1.set_title(f"{header['scenario']}: power")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_figures(log_dir, out_dir=None) -> list[Path]:
    out = Path(out_dir if out_dir is not None else log_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [plot_trajectory(log_dir, out / "trajectory.png"), plot_power(log_dir, out / "power.png")]
