"""Variance-vs-cooperativity panels from sweep CSVs (one file per ratio)."""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from .io import SchemaError, column, ok_rows, read_table
from .style import SQUEEZE_BAND, color_for_ratio, save

REQUIRED = {"status", "C", "R", "n_th", "Q", "vxx", "vpp"}
_RATIO_FILE = re.compile(r"_R([0-9.e+-]+)\.csv$")


def sweep_files(csv_dir: Path) -> list[tuple[float, Path]]:
    found = []
    for path in sorted(Path(csv_dir).glob("*_R*.csv")):
        if "_bounds_" in path.name:
            continue
        match = _RATIO_FILE.search(path.name)
        if match:
            found.append((float(match.group(1)), path))
    if not found:
        raise SchemaError(f"no sweep CSVs (*_R<ratio>.csv) found in {csv_dir}")
    return sorted(found)


def render(csv_dir: Path, out_dir: Path) -> list[Path]:
    import matplotlib.pyplot as plt

    files = sweep_files(csv_dir)
    fig, (ax_x, ax_p) = plt.subplots(1, 2, figsize=(9.0, 3.6), sharex=True)
    boundaries = None
    for index, (ratio, path) in enumerate(files):
        rows = ok_rows(read_table(path, REQUIRED))
        if not rows:
            continue
        c = np.array(column(rows, "C"))
        color = color_for_ratio(ratio, index)
        ax_x.loglog(c, column(rows, "vxx"), color=color, label=f"R = {ratio:g}")
        ax_p.loglog(c, column(rows, "vpp"), color=color, label=f"R = {ratio:g}")
        boundaries = (rows[0]["n_th"], rows[0]["Q"] / 2.0)
    for ax, label in ((ax_x, "position variance"), (ax_p, "momentum variance")):
        lo, hi = ax.get_ylim()
        ax.axhspan(min(lo, 1e-3), 1.0, **SQUEEZE_BAND)
        ax.set_ylim(lo, hi)
        if boundaries is not None:
            for value in boundaries:
                ax.axvline(value, color="red", linestyle="--", linewidth=0.8)
        ax.set_xlabel("cooperativity C")
        ax.set_ylabel(label)
    ax_x.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    return save(fig, out_dir, "fig2")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Render variance-vs-cooperativity panels from sweep CSVs.")
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
