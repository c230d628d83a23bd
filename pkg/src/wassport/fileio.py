"""Flat-file helpers: CSV with fixed 17-significant-digit encoding.

Every artifact the package writes goes through :func:`write_csv`, so a rerun
with identical inputs produces byte-identical files and every float
round-trips exactly through the text form.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = ["format_float", "write_csv", "read_csv", "write_json"]


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    cols = [np.asarray(c) for c in columns]
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise ValueError("CSV columns must have equal length")
    lines = [",".join(header)]
    for i in range(n):
        cells = []
        for c in cols:
            v = c[i]
            if np.issubdtype(c.dtype, np.integer):
                cells.append(str(int(v)))
            elif np.issubdtype(c.dtype, np.floating):
                cells.append(format_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Read a package-written CSV; returns (header, dict of columns).

    Columns parse as float arrays where possible, else stay as strings.
    """
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    data = {h: [] for h in header}
    for line in lines[1:]:
        for h, cell in zip(header, line.split(",")):
            data[h].append(cell)
    out = {}
    for h, vals in data.items():
        try:
            out[h] = np.asarray([float(v) for v in vals])
        except ValueError:
            out[h] = np.asarray(vals, dtype=object)
    return header, out


def write_json(path, record: dict) -> None:
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
