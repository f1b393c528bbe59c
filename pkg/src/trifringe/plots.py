"""Figure rendering for the command-line reports.

Every figure lands next to its delimited counterpart, same stem with a
.png suffix.  The backend is forced to Agg so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import pair_to_text

_DPI = 150


def figure_path(out_path: str) -> str:
    stem = out_path[:-4] if out_path.endswith(".csv") else out_path
    return stem + ".png"


def plot_fit_report(fits, thetas, path: str) -> None:
    """Extracted couplings vs theta with their tolerance bands."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    th = np.asarray(thetas, dtype=float)
    for idx, label in enumerate(("g1 (arms 1-2)", "g2 (arms 2-3)", "g3 (arms 1-3)")):
        g = np.array([f.coupling.couplings()[idx] for f in fits])
        lo = np.array([f.coupling_lo.couplings()[idx] for f in fits])
        hi = np.array([f.coupling_hi.couplings()[idx] for f in fits])
        line, = ax.plot(th, g, label=label)
        ax.fill_between(th, lo, hi, alpha=0.25, color=line.get_color(), linewidth=0)
    ax.set_xlabel("theta (rad)")
    ax.set_ylabel("coupling (rad)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_visibilities(records, path: str) -> None:
    """Measured visibilities against theta (or scan index when unknown)."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    thetas = np.array([r.theta for r in records])
    x = thetas if np.all(np.isfinite(thetas)) else np.arange(len(records))
    xlabel = "theta (rad)" if np.all(np.isfinite(thetas)) else "scan index"
    v = [r.visibility for r in records]
    s = [r.visibility_sigma for r in records]
    ax.errorbar(x, v, yerr=s, fmt="o", capsize=3)
    ax.axhline(0.0, color="grey", linewidth=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("visibility")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_predictions(rows, path: str) -> None:
    """Predicted pair rates vs theta, quantum solid, classical dashed."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    pairs = sorted({row["output_pair"] for row in rows})
    for pair in pairs:
        sub = [row for row in rows if row["output_pair"] == pair]
        th = np.array([row["theta"] for row in sub])
        q = np.array([row["indistinguishable"].value for row in sub])
        q_lo = np.array([row["indistinguishable"].lo for row in sub])
        q_hi = np.array([row["indistinguishable"].hi for row in sub])
        c = np.array([row["distinguishable"].value for row in sub])
        line, = ax.plot(th, q, label=f"out {pair_to_text(pair)}")
        ax.fill_between(th, q_lo, q_hi, alpha=0.2, color=line.get_color(), linewidth=0)
        ax.plot(th, c, linestyle="--", color=line.get_color(), alpha=0.7)
    ax.set_xlabel("theta (rad)")
    ax.set_ylabel("pair rate (1/s)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_fisher(curve, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(curve.thetas, curve.values, label="F(theta)")
    ax.fill_between(curve.thetas, curve.lower, curve.upper, alpha=0.25, linewidth=0)
    ax.axhline(2.0, color="grey", linewidth=0.8, linestyle=":")
    ax.set_xlabel("theta (rad)")
    ax.set_ylabel("Fisher information")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_comparison(rows, path: str) -> None:
    """Measured vs predicted visibility with the identity line."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    measured = np.array([row["measured"] for row in rows])
    sigma = np.array([row["measured_sigma"] for row in rows])
    predicted = np.array([row["predicted"] for row in rows])
    lo = predicted - np.array([row["predicted_lo"] for row in rows])
    hi = np.array([row["predicted_hi"] for row in rows]) - predicted
    ax.errorbar(predicted, measured, yerr=sigma, xerr=[lo, hi], fmt="o", capsize=3)
    span = [-1.05, 1.05]
    ax.plot(span, span, color="grey", linewidth=0.8)
    ax.set_xlabel("predicted visibility")
    ax.set_ylabel("measured visibility")
    ax.set_xlim(span)
    ax.set_ylim(span)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
