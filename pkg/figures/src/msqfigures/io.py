"""CSV ingestion with strict header validation.

The upstream tables carry a ``#``-comment provenance block, a header row,
and 17-significant-digit numeric records with empty cells for inapplicable
columns.  Rendering refuses any file whose header does not contain the
columns a figure needs; no physics is recomputed here.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path


class SchemaError(RuntimeError):
    """Input table does not match the expected column set."""


def _convert(token: str):
    if token == "":
        return None
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return float(token)
    except ValueError:
        return token


def read_table(path: Path, required: set[str]) -> list[dict]:
    """Rows as dicts; raises SchemaError on missing columns or malformed files."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file {path} not found")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    if not rows:
        raise SchemaError(f"{path} has no table body")
    reader = csv.reader(rows)
    header = next(reader)
    missing = required - set(header)
    if missing:
        raise SchemaError(f"{path} is missing column(s) {sorted(missing)}")
    out = []
    for record in reader:
        if len(record) != len(header):
            raise SchemaError(f"{path}: ragged row with {len(record)} cells")
        out.append({key: _convert(value) for key, value in zip(header, record)})
    return out


def ok_rows(rows: list[dict]) -> list[dict]:
    return [r for r in rows if r.get("status") == "ok"]


def column(rows: list[dict], name: str) -> list:
    return [r[name] for r in rows]


def finite(values) -> bool:
    return all(v is not None and math.isfinite(v) for v in values)
