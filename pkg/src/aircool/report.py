"""Figure rendering for training logs and evaluation traces.

PNG files are written next to the delimited outputs; the CSVs remain the
contract and the figures are a convenience view of the same rows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .drl import EpisodeLog  # noqa: E402
from .env import Thresholds  # noqa: E402
from .harness import StepRecord  # noqa: E402


def save_training_figure(log: list[EpisodeLog], path: str, title: str = "") -> None:
    """Per-episode penalties, cooling power and schedule/multiplier traces."""
    episodes = [row.episode for row in log]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    axes[0, 0].plot(episodes, [row.mean_cooling_power_kW for row in log], lw=0.8)
    axes[0, 0].set_ylabel("mean cooling power (kW)")
    axes[0, 1].plot(episodes, [row.mean_temp_penalty_C for row in log], lw=0.8, color="tab:red")
    axes[0, 1].set_ylabel("mean temperature penalty (C)")
    axes[1, 0].plot(episodes, [row.mean_rh_penalty_pct for row in log], lw=0.8, color="tab:blue")
    axes[1, 0].set_ylabel("mean RH penalty (%)")
    axes[1, 0].set_xlabel("episode")
    ax = axes[1, 1]
    ax.plot(episodes, [row.epsilon for row in log], lw=0.8, color="gray", label="epsilon")
    ax.plot(episodes, [row.lambda1 for row in log], lw=0.8, color="tab:red", label="lambda1")
    ax.plot(episodes, [row.lambda2 for row in log], lw=0.8, color="tab:blue", label="lambda2")
    ax.set_xlabel("episode")
    ax.legend(loc="best", fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_eval_figure(
    records: list[StepRecord], thresholds: Thresholds, path: str, title: str = ""
) -> None:
    """Supply condition against its thresholds plus the power breakdown."""
    minutes = [r.minute for r in records]
    fig, axes = plt.subplots(3, 1, figsize=(10, 8), sharex=True)
    axes[0].plot(minutes, [r.t_s for r in records], lw=0.7, color="tab:red")
    axes[0].axhline(thresholds.t_th, color="k", ls="--", lw=0.8)
    axes[0].set_ylabel("supply temperature (C)")
    axes[1].plot(minutes, [r.phi_s for r in records], lw=0.7, color="tab:blue")
    axes[1].axhline(thresholds.phi_th, color="k", ls="--", lw=0.8)
    axes[1].set_ylabel("supply RH (%)")
    axes[2].plot(minutes, [r.p_f + r.p_c for r in records], lw=0.7, label="fan + coil")
    axes[2].plot(minutes, [r.p_it for r in records], lw=0.7, label="IT")
    axes[2].set_ylabel("power (kW)")
    axes[2].set_xlabel("minute")
    axes[2].legend(loc="best", fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
