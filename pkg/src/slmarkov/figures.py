"""Figure rendering for run reports.

Two figures accompany every report CSV: the estimate figure overlays the
identified self-transition probabilities on the classical per-window
estimates (and the ground truth when present), and the uncertainty
figure shows the per-row uncertainty with reset windows marked.
matplotlib is imported lazily so report generation without figures pays
no import cost.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .report import RunReport

__all__ = ["render_report_figures"]


def render_report_figures(report: RunReport, out_base: str | Path) -> list[Path]:
    """Render the estimate and uncertainty figures next to a report.

    ``out_base`` is the stem the figure files get appended to, producing
    ``<out_base>_estimates.png`` and ``<out_base>_uncertainty.png``.
    Returns the written paths.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = report.rows
    if not rows:
        return []
    n = report.num_states
    windows = np.array([row.window_index for row in rows])
    sl = np.stack([row.transition for row in rows])
    cl = np.stack([row.classical for row in rows])
    truth = None
    if rows[0].truth is not None:
        truth = np.stack([row.truth for row in rows])

    out_base = Path(out_base)
    paths = []

    fig, ax = plt.subplots(figsize=(9, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i in range(n):
        color = colors[i % len(colors)]
        ax.plot(windows, cl[:, i, i], color=color, alpha=0.25, linewidth=0.7)
        ax.plot(
            windows, sl[:, i, i], color=color, linewidth=1.4,
            label=f"identified p_{i + 1}{i + 1}",
        )
        if truth is not None:
            ax.plot(
                windows, truth[:, i, i], color="black", linestyle="--",
                linewidth=0.9, label="ground truth" if i == 0 else None,
            )
    ax.set_xlabel("window")
    ax.set_ylabel("self-transition probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)
    ax.set_title("identified vs. classical per-window estimates")
    fig.tight_layout()
    path = out_base.parent / (out_base.name + "_estimates.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(9, 3.5))
    u = np.array([row.uncertainties for row in rows])
    for i in range(n):
        color = colors[i % len(colors)]
        ax.plot(windows, u[:, i], color=color, linewidth=1.0, label=f"u_{i + 1}")
        reset_mask = np.array([i in row.reset_rows for row in rows])
        if reset_mask.any():
            ax.scatter(
                windows[reset_mask], u[reset_mask, i],
                color=color, s=12, marker="x",
            )
    ax.set_xlabel("window")
    ax.set_ylabel("uncertainty")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("row uncertainty (x marks reset windows)")
    fig.tight_layout()
    path = out_base.parent / (out_base.name + "_uncertainty.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    return paths
