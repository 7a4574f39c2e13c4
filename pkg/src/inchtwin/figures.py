"""Matplotlib renderings saved alongside the delimited outputs."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calibrate import CalibrationResult
from .harness import RunRecord, Series

_DPI = 140


def render_run(series: Series, record: RunRecord, path: str) -> None:
    """Two-panel run figure: displacements over time and the top-down track."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(series.t, series.x_cm, label="CoM x", lw=1.4)
    ax1.plot(series.t, series.front_leg_x_cm, label="front leg", lw=0.8, alpha=0.8)
    ax1.plot(series.t, series.back_leg_x_cm, label="back leg", lw=0.8, alpha=0.8)
    ax1.set_xlabel("time [s]")
    ax1.set_ylabel("displacement [cm]")
    ax1.set_title(
        f"{record.scenario}: {record.summary['mean_speed_cm_s']:.2f} cm/s"
    )
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(alpha=0.3)

    ax2.plot(series.x_cm, series.y_cm, lw=1.2)
    ax2.plot([series.x_cm[0]], [series.y_cm[0]], "go", ms=6, label="start")
    ax2.plot([series.x_cm[-1]], [series.y_cm[-1]], "rs", ms=6, label="end")
    ax2.set_xlabel("x [cm]")
    ax2.set_ylabel("y [cm]")
    ax2.set_title("top-down track")
    ax2.axis("equal")
    ax2.legend(loc="best", fontsize=8)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_sweep(rows: list[dict], path: str, title: str = "") -> None:
    """Velocity-frequency curve with the argmax marked."""
    ok = [r for r in rows if r["status"] == "ok"]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    if ok:
        f = [r["freq_hz"] for r in ok]
        v = [r["mean_speed_cm_s"] for r in ok]
        ax.plot(f, v, "o-", lw=1.4)
        imax = int(np.argmax(v))
        ax.plot([f[imax]], [v[imax]], "r*", ms=14, label=f"peak at {f[imax]:g} Hz")
        ax.legend(loc="best", fontsize=9)
    bad = [r for r in rows if r["status"] != "ok"]
    for r in bad:
        ax.axvline(r["freq_hz"], color="r", ls=":", alpha=0.5)
    ax.set_xlabel("actuation frequency [Hz]")
    ax.set_ylabel("mean speed [cm/s]")
    ax.set_title(title or "velocity vs frequency")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_report(records: list[RunRecord], path: str) -> None:
    """Bar chart of run performance against the measured values."""
    names, sim_vals, ref_vals = [], [], []
    for rec in records:
        s = rec.summary
        if abs(s.get("yaw_rate_rad_s", 0.0)) > 0.02:
            sim = abs(s["yaw_rate_rad_s"]) * 100.0  # plot as 1e-2 rad/s
            ref = abs(rec.expected.get("yaw_rate_rad_s", math.nan)) * 100.0
            names.append(rec.scenario + "\n[10$^{-2}$ rad/s]")
        else:
            sim = s["mean_speed_cm_s"]
            ref = rec.expected.get("mean_speed_cm_s", math.nan)
            names.append(rec.scenario + "\n[cm/s]")
        sim_vals.append(sim)
        ref_vals.append(ref)
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.3 * len(names)), 4))
    ax.bar(x - 0.18, sim_vals, width=0.36, label="twin")
    ax.bar(x + 0.18, ref_vals, width=0.36, label="measured")
    ax.set_xticks(x)
    ax.set_xticklabels(names, fontsize=7)
    ax.set_ylabel("performance")
    ax.set_title("scenario performance: twin vs measured")
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_calibration(result: CalibrationResult, path: str) -> None:
    """Objective trace over the simulation budget plus final residuals."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    if result.history:
        sims = [h[0] for h in result.history]
        objs = [h[1] for h in result.history]
        ax1.plot(sims, objs, lw=1.2)
        ax1.set_yscale("log")
    ax1.set_xlabel("simulations used")
    ax1.set_ylabel("objective")
    ax1.set_title(f"search trace ({result.n_simulations} sims)")
    ax1.grid(alpha=0.3)

    if result.residuals:
        keys = list(result.residuals)
        vals = [100.0 * result.residuals[k] for k in keys]
        y = np.arange(len(keys))
        ax2.barh(y, vals)
        ax2.set_yticks(y)
        ax2.set_yticklabels([k.split(":")[0] for k in keys], fontsize=7)
        ax2.axvline(15.0, color="r", ls="--", lw=1)
        ax2.axvline(-15.0, color="r", ls="--", lw=1)
        ax2.set_xlabel("residual [%]")
        ax2.set_title("converged" if result.converged else "NOT converged")
        ax2.grid(alpha=0.3, axis="x")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
