"""Figures for the CLI report path.

matplotlib is an optional dependency (``pip install artifact[plot]``); it is
imported on first use and always with the non-interactive Agg backend.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("plotting needs matplotlib; install the 'plot' extra") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_paths(path: np.ndarray, fname, names=None, title="Coefficient paths"):
    """Draw one line per predictor across iterations and save to ``fname``.

    Predictors that never leave zero are skipped; the others are labelled
    at the right margin.
    """
    plt = _pyplot()
    iters = np.arange(path.shape[0])
    beta = path[:, 1:]
    names = names or [f"beta_{j + 1}" for j in range(beta.shape[1])]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for j in np.flatnonzero(np.any(beta != 0, axis=0)):
        ax.plot(iters, beta[:, j], lw=1.2)
        ax.annotate(names[j], (iters[-1], beta[-1, j]), xytext=(3, 0),
                    textcoords="offset points", fontsize=7, va="center")
    ax.axhline(0, color="0.6", lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("coefficient (standardized)")
    ax.set_title(title)
    ax.set_xlim(0, iters[-1] * 1.08 if iters[-1] else 1)
    fig.tight_layout()
    fig.savefig(fname, dpi=120)
    plt.close(fig)
    return fname


def plot_measure(mass, fname, names=None, title="Column measure", reference=None):
    """Bar chart of column masses, optionally overlaid with reference masses."""
    plt = _pyplot()
    mass = np.asarray(mass, dtype=float)
    idx = np.arange(mass.size)
    fig, ax = plt.subplots(figsize=(max(5, 0.18 * mass.size + 2), 3.5))
    ax.bar(idx, mass, color="C0", width=0.8, label="observed")
    if reference is not None:
        ax.plot(idx, np.asarray(reference, dtype=float), "o", color="C3", ms=4, label="target")
        ax.legend(frameon=False, fontsize=8)
    ax.set_xticks(idx)
    ax.set_xticklabels(names or [str(j + 1) for j in idx], rotation=90, fontsize=6)
    ax.set_ylabel("mass")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(fname, dpi=120)
    plt.close(fig)
    return fname
