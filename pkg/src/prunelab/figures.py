"""Report figures rendered with matplotlib (Agg backend, file output only).

These accompany the delimited output of the report-producing CLI paths:
``compare`` writes a theory-vs-experiment figure next to its CSV, and ``dp``
writes a training-trajectory figure next to the history CSV.  The
dependency-free SVG path in :mod:`prunelab.svgplot` stays available for
plain curve plots.
"""

from __future__ import annotations

import math

from .practice import DPHistory
from .sweep import CellRow

__all__ = ["save_compare_figure", "save_dp_figure"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def save_compare_figure(rows: list[CellRow], path: str) -> None:
    """Theory curves with empirical error bars, one panel per lambda.

    Series are keyed by strategy identity; x is the presented pool size n.
    """
    plt = _pyplot()
    lambdas = sorted({row.lam for row in rows if not row.error_code})
    if not lambdas:
        raise ValueError("no completed rows to plot")
    fig, axes = plt.subplots(1, len(lambdas), figsize=(6.0 * len(lambdas), 4.5), squeeze=False)
    for ax, lam in zip(axes[0], lambdas):
        lam_rows = [r for r in rows if not r.error_code and r.lam == lam]
        series: dict[str, list[CellRow]] = {}
        for row in lam_rows:
            label = row.strategy if row.xi is None else f"{row.strategy} xi={row.xi:g}"
            series.setdefault(label, []).append(row)
        for label in sorted(series):
            group = sorted(series[label], key=lambda r: r.n)
            ns = [r.n for r in group]
            theory = [r.theory_error for r in group]
            line = ax.plot(ns, theory, "-", label=f"{label} (theory)")[0]
            emp = [(r.n, r.empirical_mean, r.empirical_std, r.trials) for r in group if r.empirical_mean is not None]
            if emp:
                ns_e, means, stds, trials = zip(*emp)
                errs = [s / math.sqrt(t) if (s is not None and t and t > 1) else 0.0 for s, t in zip(stds, trials)]
                ax.errorbar(ns_e, means, yerr=errs, fmt="o", ms=4, capsize=3,
                            color=line.get_color(), label=f"{label} (simulated)")
        ax.set_xlabel("pool size n")
        ax.set_ylabel("test error")
        ax.set_title(f"lambda = {lam:g}")
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_dp_figure(history: DPHistory, path: str) -> None:
    """Test error and pool size over training steps, with augmentation marks."""
    plt = _pyplot()
    events = [e for e in history.events if not math.isnan(e.test_error_exact)]
    steps = [e.step for e in events]
    errors = [e.test_error_exact for e in events]
    pools = [e.pool_size for e in events]
    aug_steps = [e.step for e in history.events if e.augmentation_flag]

    fig, (ax_err, ax_pool) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    ax_err.plot(steps, errors, "o-", ms=3)
    for s in aug_steps:
        ax_err.axvline(s, color="#e15759", alpha=0.35, lw=1)
    ax_err.set_ylabel("test error (exact)")
    ax_err.set_title("adaptive pool growth")
    ax_err.grid(True, alpha=0.3)

    ax_pool.step(steps, pools, where="post")
    for s in aug_steps:
        ax_pool.axvline(s, color="#e15759", alpha=0.35, lw=1)
    ax_pool.set_xlabel("training step")
    ax_pool.set_ylabel("pool size")
    ax_pool.grid(True, alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
