"""Matplotlib figures for trajectories, capacity curves and the oracle check."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .model import TRUCK  # noqa: E402
from .profiler import sample_trajectory  # noqa: E402

KIND_COLORS = {0: "tab:blue", 1: "tab:red"}
STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamps or version strings, so reruns are byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trajectories(trajs, path, title=None, dt=0.1):
    """Position against time, one line per vehicle, coloured by kind."""
    with plt.rc_context(STYLE):
        fig, (ax_x, ax_v) = plt.subplots(2, 1, figsize=(7, 5.5), sharex=True)
        seen = set()
        for tr in trajs:
            t = np.arange(tr.t0, tr.tf, dt)
            t = np.append(t, tr.tf)
            x, v, _ = sample_trajectory(tr, t)
            k = int(tr.kind)
            label = None if k in seen else ("truck" if k == TRUCK else "car")
            seen.add(k)
            ax_x.plot(t, x, color=KIND_COLORS[k], lw=0.9, label=label)
            ax_v.plot(t, v, color=KIND_COLORS[k], lw=0.9)
        ax_x.axhline(0.0, color="k", lw=0.5, ls=":")
        ax_x.set_ylabel("position x (m)")
        ax_v.set_ylabel("speed (m/s)")
        ax_v.set_xlabel("time (s)")
        if seen:
            ax_x.legend(loc="lower right", frameon=False)
        if title:
            ax_x.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_capacity(report, path):
    """Per-lane panels: unsuitable proportions against queue tails."""
    x = np.asarray(report.x)
    lanes = len(report.prop_real)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, lanes, figsize=(4.2 * lanes, 3.4), squeeze=False, sharey=True)
        for l, ax in enumerate(axes[0]):
            ax.plot(x, report.prop_real[l], color="tab:blue", lw=1.2, label="unsuitable (finite accel.)")
            ax.plot(x, report.p_q_gt_n1[l], color="tab:blue", lw=1.0, ls="--", label=r"$P(Q > N_1(x))$")
            ax.plot(x, report.prop_inf[l], color="tab:orange", lw=1.2, label="unsuitable (infinite accel.)")
            ax.plot(x, report.p_q_gt_n2[l], color="tab:orange", lw=1.0, ls="--", label=r"$P(Q > N_2(x))$")
            ax.set_xlabel("control region length x (m)")
            ax.set_title(f"lane {l}  (load {report.loads[l]:.3f})")
            ax.set_ylim(-0.02, 1.02)
        axes[0][0].set_ylabel("proportion / probability")
        axes[0][-1].legend(loc="upper right", frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_oracle(results, path):
    """Relative objective gap per battery platoon at h and h/2."""
    idx = np.arange(len(results))
    coarse = [r.coarse.objective_gap for r in results]
    fine = [r.fine.objective_gap for r in results]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, 3.2))
        w = 0.4
        ax.bar(idx - w / 2, coarse, w, label=f"h = {results[0].coarse.h:g} s" if results else None)
        ax.bar(idx + w / 2, fine, w, label=f"h = {results[0].fine.h:g} s" if results else None)
        ax.set_xticks(idx)
        ax.set_xticklabels([r.kinds for r in results], rotation=90)
        ax.set_ylabel("relative objective gap")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)
