"""Batch figures rendered from the experiment CSV outputs.

Each function reads one of the delimited files written by the experiment
driver and saves a PNG next to it; nothing is displayed interactively.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _read_csv(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        return {}
    return {name: [row[name] for row in rows] for name in rows[0]}


def _mean_by_step(steps, values) -> tuple[np.ndarray, np.ndarray]:
    steps = np.asarray(steps, dtype=int)
    values = np.asarray(values, dtype=float)
    uniq = np.unique(steps)
    means = np.array([values[steps == s].mean() for s in uniq])
    return uniq, means


def render_gospa(out_dir: Path) -> Path | None:
    path = out_dir / "gospa.csv"
    if not path.exists():
        return None
    data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, label in [
        ("gospa", "total"),
        ("localization", "localization"),
        ("missed", "missed"),
        ("false_alarm", "false alarm"),
    ]:
        steps, means = _mean_by_step(data["step"], data[name])
        ax.plot(steps, means, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("GOSPA [m]")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    target = out_dir / "gospa.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target


def render_rmse(out_dir: Path) -> Path | None:
    path = out_dir / "rmse.csv"
    if not path.exists():
        return None
    data = _read_csv(path)
    steps = np.asarray(data["step"], dtype=int)
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    series = [
        ("rmse_pos_m", "position RMSE [m]"),
        ("rmse_heading_rad", "heading RMSE [rad]"),
        ("rmse_bias_m", "clock-bias RMSE [m]"),
    ]
    bounds_path = out_dir / "bounds.csv"
    peb = None
    if bounds_path.exists():
        bdata = _read_csv(bounds_path)
        peb = (np.asarray(bdata["step"], dtype=int), np.asarray(bdata["peb_m"], dtype=float))
    for ax, (name, label) in zip(axes, series):
        ax.plot(steps, np.asarray(data[name], dtype=float), label="filter")
        if name == "rmse_pos_m" and peb is not None:
            ax.plot(peb[0], peb[1], "--", label="PEB")
            ax.legend()
        ax.set_ylabel(label)
        ax.set_yscale("log")
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("step")
    fig.tight_layout()
    target = out_dir / "rmse.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target


def render_bounds(out_dir: Path) -> Path | None:
    path = out_dir / "bounds.csv"
    if not path.exists():
        return None
    data = _read_csv(path)
    steps = np.asarray(data["step"], dtype=int)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, np.asarray(data["peb_m"], dtype=float), label="PEB")
    ax.plot(steps, np.asarray(data["peb_known_map_m"], dtype=float), "--", label="PEB w/ map")
    for name in data:
        if name.startswith("leb_"):
            vals = np.asarray(data[name], dtype=float)
            ax.plot(steps, vals, alpha=0.4, label=name[4:-2])
    ax.set_xlabel("step")
    ax.set_ylabel("bound [m]")
    ax.set_yscale("log")
    ax.legend(ncol=3, fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    target = out_dir / "bounds.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target


def render_timing(out_dir: Path) -> Path | None:
    path = out_dir / "timing.csv"
    if not path.exists():
        return None
    data = _read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, label in [("predict_ms", "prediction"), ("update_ms", "update"), ("total_ms", "total")]:
        steps, means = _mean_by_step(data["step"], data[name])
        ax.plot(steps, means, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("wall time [ms]")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    target = out_dir / "timing.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target


def render_report(out_dir) -> list:
    """Render every figure whose source CSV exists; returns written paths."""
    out_dir = Path(out_dir)
    written = []
    for renderer in (render_gospa, render_rmse, render_bounds, render_timing):
        target = renderer(out_dir)
        if target is not None:
            written.append(target)
    return written
