"""Variance maps over (n_th, C) with squeezing shades and overlay lines.

Inputs are 2-D sweep CSVs (one per ratio).  Shaded regions mark where the
tabulated variances dip below 1, the dashed line is the tabulated RWA
breakdown (omega_meas = 1 contour), and dotted lines overlay closed-form
thresholds from a companion thresholds CSV when present.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .fig2 import sweep_files
from .io import SchemaError, ok_rows, read_table
from .style import save

REQUIRED = {"status", "C", "R", "n_th", "omega_meas", "vxx", "vpp"}
THRESH_REQUIRED = {"status", "target", "n_th", "R", "eta", "c_closed"}


def _grid(rows: list[dict], field: str):
    n_th = np.array(sorted({r["n_th"] for r in rows}))
    c = np.array(sorted({r["C"] for r in rows}))
    table = {(r["n_th"], r["C"]): r[field] for r in rows}
    values = np.array([[table[(n, cc)] for cc in c] for n in n_th])
    return n_th, c, values


def render(csv_dir: Path, out_dir: Path) -> list[Path]:
    import matplotlib.colors as mcolors
    import matplotlib.pyplot as plt

    files = sweep_files(csv_dir)
    thresholds = []
    for path in sorted(Path(csv_dir).glob("*_thresholds.csv")):
        thresholds.extend(ok_rows(read_table(path, THRESH_REQUIRED)))

    outputs = []
    for index, (ratio, path) in enumerate(files):
        rows = ok_rows(read_table(path, REQUIRED))
        if not rows:
            raise SchemaError(f"{path} contains no ok rows")
        n_th, c, vxx = _grid(rows, "vxx")
        if n_th.size < 2 or c.size < 2:
            raise SchemaError(f"{path} is not a 2-D sweep")
        _, _, vpp = _grid(rows, "vpp")
        _, _, wm = _grid(rows, "omega_meas")

        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        mesh = ax.pcolormesh(n_th, c, np.log10(vxx).T, cmap="viridis",
                             norm=mcolors.Normalize(), shading="nearest")
        fig.colorbar(mesh, ax=ax, label="log10 position variance")
        for values, shade in ((vxx, "#4c9ced"), (vpp, "#ff9f42")):
            mask = values < 1.0
            if mask.any():
                ax.contourf(n_th, c, mask.T.astype(float), levels=[0.5, 1.5],
                            colors=[shade], alpha=0.35)
                ax.contour(n_th, c, values.T, levels=[1.0], colors=[shade],
                           linewidths=1.2)
        ax.contour(n_th, c, wm.T, levels=[1.0], colors="black",
                   linestyles="--", linewidths=1.0)
        for target, style in (("position", ":"), ("momentum", ":")):
            over = sorted(
                ((r["n_th"], r["c_closed"]) for r in thresholds
                 if r["target"] == target and r["R"] == ratio
                 and r["c_closed"] is not None),
            )
            if over:
                xs, ys = zip(*over)
                color = "#1d5ca8" if target == "position" else "#c85c00"
                ax.plot(xs, ys, linestyle=style, color=color, linewidth=1.4)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("thermal occupation n_th")
        ax.set_ylabel("cooperativity C")
        ax.set_title(f"R = {ratio:g}")
        fig.tight_layout()
        outputs.extend(save(fig, out_dir, f"fig3_R{ratio:g}"))
    return outputs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Render variance maps over (n_th, C) from 2-D sweep CSVs.")
    parser.add_argument("--csv-dir", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        for path in render(Path(args.csv_dir), Path(args.out)):
            print(f"wrote {path}")
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
