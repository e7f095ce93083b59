"""Shared deterministic rendering conventions."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "mechsqueeze-figures"

import matplotlib.pyplot as plt  # noqa: E402

SQUEEZE_BAND = dict(color="0.85", zorder=0)

# cold-to-warm ordering by spring-shift ratio
COLD = ["#1f77b4", "#17becf", "#2ca02c", "#9edae5"]
WARM = ["#d62728", "#ff7f0e", "#e377c2", "#bcbd22"]


def color_for_ratio(ratio: float, index: int) -> str:
    palette = COLD if ratio <= 1.0 else WARM
    return palette[index % len(palette)]


def save(fig, out_dir: Path, stem: str) -> list[Path]:
    """Vector graphics plus raster preview, deterministic bytes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    svg = out_dir / f"{stem}.svg"
    png = out_dir / f"{stem}.png"
    fig.savefig(svg, metadata={"Date": None})
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return [svg, png]
