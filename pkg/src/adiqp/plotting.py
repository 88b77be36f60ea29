"""PNG figures for the CLI report paths.

Figures are drawn on bare ``Figure`` objects with the Agg canvas, so nothing
touches pyplot's global state and no display is needed.  PNG metadata is
stripped so repeated runs write identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {"figsize": (6.0, 3.6), "dpi": 120}


def _new(**kw):
    fig = Figure(figsize=kw.get("figsize", STYLE["figsize"]), dpi=STYLE["dpi"])
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def plot_distributions(dists: dict, path, max_outcomes: int = 64) -> Path:
    """Grouped bars of one or more Distribution objects over their common outcomes."""
    keys = sorted(set().union(*(d.probs for d in dists.values())))
    if len(keys) > max_outcomes:
        # keep the heaviest outcomes so the chart stays legible
        weight = {y: max(d[y] for d in dists.values()) for y in keys}
        keys = sorted(sorted(keys, key=lambda y: -weight[y])[:max_outcomes])
    fig, ax = _new()
    width = 0.8 / max(1, len(dists))
    x = np.arange(len(keys))
    for i, (label, d) in enumerate(dists.items()):
        ax.bar(x + i * width, [d[y] for y in keys], width, label=label)
    ax.set_xticks(x + width * (len(dists) - 1) / 2)
    ax.set_xticklabels(keys, rotation=90, fontsize=6)
    ax.set_ylabel("probability")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_gap_histogram(gaps, n: int, path) -> Path:
    """Histogram of gap(f)^2 / 2^n with the 1/2 threshold marked."""
    ratio = np.asarray(gaps, dtype=float) ** 2 / 2.0**n
    fig, ax = _new()
    ax.hist(ratio, bins=40, color="0.4")
    ax.axvline(0.5, color="C3", linestyle="--", label="threshold 1/2")
    frac = float(np.mean(ratio >= 0.5)) if len(ratio) else 0.0
    ax.set_xlabel(r"gap$^2$ / $2^n$")
    ax.set_ylabel("count")
    ax.set_title(f"n = {n}, fraction above threshold = {frac:.4f}", fontsize=9)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_scaling(sizes, seconds, path, label: str = "strong simulation") -> Path:
    """Runtime against qubit count on log-log axes with a slope-1 guide."""
    sizes = np.asarray(sizes, dtype=float)
    seconds = np.asarray(seconds, dtype=float)
    fig, ax = _new()
    ax.loglog(sizes, seconds, "o-", label=label)
    ax.loglog(sizes, seconds[0] * sizes / sizes[0], ":", color="0.5", label="linear")
    ax.set_xlabel("qubits")
    ax.set_ylabel("seconds")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_stabilizer_test(outcome, path) -> Path:
    """Per-generator failure rate from a stabilizer test outcome."""
    vs = sorted(outcome.per_generator)
    rates = [f / m if m else 0.0 for m, f in (outcome.per_generator[v] for v in vs)]
    fig, ax = _new()
    ax.bar(vs, rates, color="C0")
    ax.set_xlabel("generator (vertex)")
    ax.set_ylabel("failure rate")
    ax.set_title(f"failures {outcome.failures}/{outcome.tested}, bound {outcome.fidelity_lower_bound:.4f}", fontsize=9)
    return _save(fig, path)


def plot_residuals(residuals: dict, path) -> Path:
    """Bar chart of per-gadget residuals on a log scale."""
    names = list(residuals)
    vals = np.maximum([residuals[k] for k in names], 1e-18)
    fig, ax = _new()
    ax.bar(range(len(names)), vals, color="C2")
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, fontsize=7)
    ax.set_ylabel("residual")
    return _save(fig, path)
