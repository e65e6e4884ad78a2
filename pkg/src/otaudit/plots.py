"""Figure rendering for the CLI report path.

Each writer takes already-computed report data and saves one PNG next to
the delimited output. Figures are a convenience view; the JSON/CSV files
remain the contractual outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_simulation(years: list[dict], path) -> Path:
    """Per-year disparate impact ratio against the constant transport distance."""
    yr = [row["year"] for row in years]
    di = [row["di_ratio"] for row in years]
    w = [row["wasserstein"] for row in years]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(yr, di, "o-", ms=3, lw=1, color="tab:blue", label="disparate impact ratio")
    ax.plot(yr, w, "s-", ms=3, lw=1, color="tab:red", label="Wasserstein-2 distance")
    ax.axhline(0.8, color="tab:blue", ls=":", lw=1, alpha=0.6, label="80% rule")
    ax.set_xlabel("year")
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("Admissions audit: rate parity vs. transport distance")
    return _save(fig, path)


def plot_mass_shares(matrix, names_a, names_b, path) -> Path:
    """Heatmap of the fraction of each source group's mass per target group."""
    matrix = np.asarray(matrix)
    fig, ax = plt.subplots(
        figsize=(1.2 + 0.9 * len(names_b), 1.2 + 0.6 * len(names_a))
    )
    im = ax.imshow(matrix, cmap="viridis", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(names_b)), names_b, rotation=45, ha="right", fontsize=7)
    ax.set_yticks(range(len(names_a)), names_a, fontsize=7)
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(
                j, i, f"{matrix[i, j]:.1%}",
                ha="center", va="center", fontsize=7,
                color="white" if matrix[i, j] < 0.6 else "black",
            )
    fig.colorbar(im, ax=ax, label="share of transported mass")
    ax.set_title("Where each source group's mass lands")
    return _save(fig, path)


def plot_outcome_distributions(p_a, p_b, wasserstein, path) -> Path:
    """Overlaid histograms of the two populations' positive-label probabilities."""
    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.linspace(0.0, 1.0, 31)
    ax.hist(p_a, bins=bins, alpha=0.6, density=True, label="population A")
    ax.hist(p_b, bins=bins, alpha=0.6, density=True, label="population B")
    ax.set_xlabel("positive-label probability")
    ax.set_ylabel("density")
    ax.set_title(f"Outcome distributions (W = {wasserstein:.4f})")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_recourse_probabilities(results, path) -> Path:
    """Distribution of good-label probability at each interpolation level."""
    fig, ax = plt.subplots(figsize=(7, 4))
    data = [np.asarray(r.good_label_probability) for r in results]
    labels = [f"{r.alpha:g}" for r in results]
    parts = ax.violinplot(data, showmedians=True, widths=0.8)
    for body in parts["bodies"]:
        body.set_alpha(0.6)
    ax.set_xticks(range(1, len(labels) + 1), labels)
    ax.set_xlabel("interpolation weight alpha")
    ax.set_ylabel("good-label probability")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("Recourse: re-scored probabilities by alpha")
    return _save(fig, path)


def plot_feature_changes(summary_rows, path) -> Path:
    """Mean change per actionable column among the reclassified, by alpha."""
    alphas = sorted({row["alpha"] for row in summary_rows})
    columns = sorted({row["column"] for row in summary_rows})
    fig, ax = plt.subplots(figsize=(1.5 + 0.7 * len(columns), 4))
    width = 0.8 / max(len(alphas), 1)
    x = np.arange(len(columns))
    for k, alpha in enumerate(alphas):
        deltas = []
        for col in columns:
            match = [
                row["mean_delta"]
                for row in summary_rows
                if row["alpha"] == alpha and row["column"] == col
            ]
            deltas.append(match[0] if match else 0.0)
        ax.bar(x + k * width, deltas, width, label=f"alpha={alpha:g}")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xticks(x + 0.4 - width / 2, columns, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("mean change (encoded units)")
    ax.set_title("Actionable feature changes among the reclassified")
    ax.legend(fontsize=8)
    return _save(fig, path)
