"""Static SVG line charts of true, observed and identified trajectories.

Figures use the Agg backend and a fixed SVG hash salt with no date
metadata, so the same data always produces the same file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "isindy",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}
SVG_METADATA = {"Date": None, "Creator": None}


def plot_trajectories(path, times: np.ndarray, truth: np.ndarray,
                      identified: np.ndarray | None = None,
                      observations: np.ndarray | None = None,
                      labels: Sequence[str] = (), title: str = "") -> Path:
    """One panel per state: observations as green dots, truth solid red,
    identified trajectory dashed black."""
    truth = np.atleast_2d(np.asarray(truth, float).T).T
    d = truth.shape[1]
    labels = list(labels) or [f"x{i + 1}" for i in range(d)]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(d, 1, figsize=(6.0, 1.9 * d + 0.5), sharex=True,
                                 squeeze=False)
        for i, ax in enumerate(axes[:, 0]):
            if observations is not None:
                ax.plot(times, observations[:, i], ".", color="green", ms=2,
                        label="observations")
            ax.plot(times, truth[:, i], "-", color="red", lw=1.2, label="true")
            if identified is not None:
                ax.plot(times, identified[:, i], "--", color="black", lw=1.0,
                        label="identified")
            ax.set_ylabel(labels[i])
        axes[0, 0].legend(loc="best", fontsize=7)
        axes[-1, 0].set_xlabel("t")
        if title:
            axes[0, 0].set_title(title)
        fig.tight_layout()
        path = Path(path)
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
        plt.close(fig)
    return path
