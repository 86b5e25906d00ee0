"""Figure rendering for the experiment harness.

Figures are written next to the CSV artifacts; the CSVs remain the
primary output and everything here can be switched off with the CLI's
``--no-figures`` flag.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# Strip the version string so repeated runs produce identical bytes.
_PNG_METADATA = {"Software": None}
_FIGSIZE = (6.0, 4.0)


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)


def render_accuracy_figure(aggregate_rows: list[dict], dataset: str,
                           path: str) -> None:
    """Mean test accuracy versus noise level, one line per variant."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    variants = sorted({row["variant"] for row in aggregate_rows})
    for variant in variants:
        pts = sorted((row["q"], row["mean_accuracy"], row["std_accuracy"])
                     for row in aggregate_rows if row["variant"] == variant)
        qs = [p[0] for p in pts]
        means = [p[1] for p in pts]
        stds = [p[2] for p in pts]
        ax.errorbar(qs, means, yerr=stds, marker="o", capsize=3, label=variant)
    ax.set_xlabel("noise level q")
    ax.set_ylabel("test accuracy")
    ax.set_title(dataset)
    ax.grid(True, alpha=0.3)
    ax.legend()
    _save(fig, path)


def render_convergence_figure(traces: dict[str, tuple[list[int], list[float]]],
                              dataset: str, path: str) -> None:
    """Duality gap versus iteration on log-log axes, one line per solver."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for name in sorted(traces):
        iters, gaps = traces[name]
        ax.loglog(iters, [max(g, 1e-16) for g in gaps], label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("duality gap")
    ax.set_title(dataset)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, path)
