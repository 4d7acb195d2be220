"""Figure rendering for CLI reports. Everything goes straight to PNG files
through the Agg backend; nothing here opens a window.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import log_frequency_grid


def plot_curves(path, curves: dict[str, np.ndarray], title: str, ylabel: str = "level (dB)"):
    """Overlay named curves on the canonical log-frequency grid."""
    grid = log_frequency_grid()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, curve in curves.items():
        ax.semilogx(grid, curve, label=label, linewidth=1.2)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_match(path, difference: np.ndarray, response: np.ndarray, title: str = "EQ match"):
    """Difference curve against the response the model chose for it."""
    return plot_curves(
        path,
        {"difference": difference, "predicted response": response, "residual": difference - response},
        title,
    )


def plot_history(path, stage_losses: dict[str, list[float]], title: str = "training loss"):
    """Per-epoch mean loss for one or more training stages."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for stage, losses in stage_losses.items():
        ax.plot(range(1, len(losses) + 1), losses, marker="o", label=stage)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_bank(path, entries: dict[str, np.ndarray], title: str = "target bank"):
    return plot_curves(path, entries, title)
