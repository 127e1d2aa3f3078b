"""File-output figure rendering for CLI reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_loss_noise_figure(points, path, d: int) -> None:
    """Render the (t, visibility, efficiency) curve next to its CSV output."""
    t = [p.t for p in points]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(t, [p.visibility for p in points], label="visibility v(t)")
    ax.plot(t, [p.efficiency for p in points], label="efficiency eta(t)", linestyle="--")
    ax.set_xlabel("threshold parameter t")
    ax.set_ylabel("critical value")
    ax.set_title(f"Classical-model noise/loss boundary, d = {d}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
