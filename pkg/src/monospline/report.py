"""Figure rendering for the CLI report path.

Renders the fitted curve against the data, the derivative with the zero line
and certified margin, and the reconstructed control input.  Files are written
alongside the delimited curve output.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_figures"]


def render_figures(sol, curve: np.ndarray, outdir: str, dpi: int = 150) -> list[str]:
    """Write fit/derivative/input figures to ``outdir``; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    t, y, ydot, u = curve.T
    paths = []

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, y, "-", color="tab:blue", label="estimate y(t)")
    ax.plot(sol.data.times, sol.data.values, "o", mfc="none",
            color="tab:red", label="data")
    ax.set_xlabel("t")
    ax.set_ylabel("y")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    paths.append(_save(fig, outdir, "fit.png", dpi))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, ydot, "-", color="tab:blue", label="derivative")
    ax.axhline(0.0, color="k", lw=0.8)
    if sol.plan is not None:
        ax.axhline(sol.plan.epsilon, color="tab:green", lw=0.8, ls="--",
                   label=f"margin eps={sol.plan.epsilon:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("dy/dt")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    paths.append(_save(fig, outdir, "derivative.png", dpi))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, u, "-", color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("u")
    ax.set_title("control input")
    ax.grid(True, alpha=0.3)
    paths.append(_save(fig, outdir, "input.png", dpi))
    return paths


def _save(fig, outdir, name, dpi):
    path = os.path.join(outdir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
