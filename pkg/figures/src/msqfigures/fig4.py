"""Second-mode degradation bounds vs photon number, one band pair per ratio."""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from .io import SchemaError, column, ok_rows, read_table
from .style import SQUEEZE_BAND, color_for_ratio, save

REQUIRED = {"status", "n_cav", "R", "v_lower", "v_upper", "v_single_mode"}
_RATIO_FILE = re.compile(r"_bounds_R([0-9.e+-]+)\.csv$")


def bounds_files(csv_dir: Path) -> list[tuple[float, Path]]:
    found = []
    for path in sorted(Path(csv_dir).glob("*_bounds_R*.csv")):
        match = _RATIO_FILE.search(path.name)
        if match:
            found.append((float(match.group(1)), path))
    if not found:
        raise SchemaError(f"no bounds CSVs (*_bounds_R<ratio>.csv) in {csv_dir}")
    return sorted(found, reverse=True)


def render(csv_dir: Path, out_dir: Path) -> list[Path]:
    import matplotlib.pyplot as plt

    files = bounds_files(csv_dir)
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    for index, (ratio, path) in enumerate(files):
        rows = ok_rows(read_table(path, REQUIRED))
        if not rows:
            continue
        n = np.array(column(rows, "n_cav"))
        lower = np.array(column(rows, "v_lower"))
        upper = np.array(column(rows, "v_upper"))
        if np.any(lower > upper * (1 + 1e-12)):
            raise SchemaError(f"{path}: lower bound exceeds upper bound")
        color = color_for_ratio(min(ratio, 1.0), index)
        ax.fill_between(n, lower, upper, color=color, alpha=0.25, linewidth=0)
        ax.loglog(n, lower, color=color, linewidth=1.2, label=f"R = {ratio:g}")
        ax.loglog(n, upper, color=color, linewidth=1.2, linestyle="-.")
        ax.loglog(n, column(rows, "v_single_mode"), color="black",
                  linewidth=0.9, linestyle="--")
    lo, hi = ax.get_ylim()
    ax.axhspan(min(lo, 1e-3), 1.0, **SQUEEZE_BAND)
    ax.set_ylim(lo, hi)
    ax.set_xlabel("intracavity photon number")
    ax.set_ylabel("conditional position variance")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    return save(fig, out_dir, "fig4")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Render second-mode variance bounds vs photon number.")
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
