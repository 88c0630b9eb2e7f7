"""Figures written next to the delimited reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..evaluator import ApResult  # noqa: E402


def _label(row) -> str:
    s = row.strategy
    return f"T{s.T}/K{s.K}" if s.kind == "topk" else s.kind


def plot_ablation(rows, path) -> Path:
    """Bar charts of AP and identity switches per strategy."""
    path = Path(path)
    labels = [_label(r) for r in rows]
    colors = ["#7f7f7f" if r.strategy.kind != "topk" else "#1f77b4" for r in rows]
    x = range(len(rows))

    fig, (ax_ap, ax_sw) = plt.subplots(2, 1, figsize=(max(6, 0.55 * len(rows)), 6), sharex=True)
    ax_ap.bar(x, [100 * r.AP for r in rows], color=colors)
    ax_ap.set_ylabel("AP (%)")
    ax_sw.bar(x, [r.id_switches for r in rows], color=colors)
    ax_sw.set_ylabel("identity switches")
    ax_sw.set_xticks(list(x))
    ax_sw.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    for ax in (ax_ap, ax_sw):
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_ap_thresholds(result: ApResult, path) -> Path:
    path = Path(path)
    thr = list(result.per_threshold)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(thr, [100 * result.per_threshold[t] for t in thr], marker="o")
    ax.axhline(100 * result.AP, color="k", lw=0.8, ls="--", label=f"AP = {100 * result.AP:.1f}")
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("AP (%)")
    ax.set_ylim(0, 105)
    ax.legend(frameon=False)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
