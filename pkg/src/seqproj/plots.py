"""Figure rendering for experiment and sweep reports.

Figures are written next to the delimited outputs so a report directory is
self-contained: the distortion profile over time, the stopping-time
histogram, and (for sweeps) the failure-rate curve against the target budget.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first
import numpy as np  # noqa: E402

from .harness import ExperimentReport, SweepEntry  # noqa: E402


def render_experiment_figures(
    report: ExperimentReport, directory: str | Path
) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [
        _distortion_profile(report, directory / "distortion_profile.png"),
        _stopping_times(report, directory / "stopping_times.png"),
    ]


def _distortion_profile(report: ExperimentReport, path: Path) -> Path:
    eps = report.config["plan"]["eps"]
    strategy = report.config["strategy"]["kind"]
    t = np.arange(len(report.distortion_mean))

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(t, report.distortion_max, color="tab:red", alpha=0.7, label="max |Y|/S")
    ax.plot(t, report.distortion_mean, color="tab:blue", label="mean |Y|/S")
    ax.axhline(eps, color="black", linestyle="--", linewidth=1.0, label=f"target eps = {eps}")
    ax.set_xlabel("step t")
    ax.set_ylabel("distortion")
    ax.set_title(f"{strategy} strategy, M = {report.M_effective}, {report.n_valid} trials")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _stopping_times(report: ExperimentReport, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    if report.stopping_times:
        taus = sorted(report.stopping_times)
        counts = [report.stopping_times[t] for t in taus]
        ax.bar(taus, counts, width=0.9, color="tab:orange")
    else:
        ax.text(0.5, 0.5, "no stopped paths", ha="center", va="center",
                transform=ax.transAxes)
    ax.set_xlabel("first step outside the distortion band")
    ax.set_ylabel("trials")
    ax.set_title(
        f"stopping times ({report.n_no_stop} of {report.n_valid} trials never stopped)"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_sweep_figure(
    entries: Sequence[SweepEntry], directory: str | Path
) -> Path | None:
    done = [e for e in entries if e.report is not None]
    if not done:
        return None
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "sweep_failure_rates.png"

    ms = [e.config.M for e in done]
    x = ms if len(set(ms)) == len(ms) else [e.index for e in done]
    xlabel = "sketch dimension M" if x is ms else "config index"
    rates = [e.report.failure.rate for e in done]
    err_low = [e.report.failure.rate - e.report.failure.low for e in done]
    err_high = [e.report.failure.high - e.report.failure.rate for e in done]

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.errorbar(x, rates, yerr=[err_low, err_high], fmt="o-", capsize=3,
                color="tab:blue", label="empirical failure rate")
    delta = done[0].config.plan.delta
    ax.axhline(delta, color="black", linestyle="--", linewidth=1.0,
               label=f"target delta = {delta}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("P(any step leaves the distortion band)")
    ax.set_title("failure rate across the sweep (95% Wilson intervals)")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
