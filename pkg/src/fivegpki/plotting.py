"""CDF figures for benchmark results (matplotlib, headless)."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import BenchResult, cdf_points  # noqa: E402


def plot_cdfs(results: Iterable[BenchResult], path: str | os.PathLike, title: str) -> Path:
    """One step curve per result, x in milliseconds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        for r in results:
            pts = cdf_points(r.samples)
            ax.step([x * 1e3 for x, _ in pts], [f for _, f in pts], where="post", label=r.scheme_label)
        ax.set_xlabel("time (ms)")
        ax.set_ylabel("cumulative fraction")
        ax.set_ylim(0, 1.02)
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path
