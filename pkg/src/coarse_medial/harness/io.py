"""Point-cloud CSV files: one point per row, ``k`` numeric columns.

Lines starting with ``#`` are comments (a header line, typically).  The
dimension is taken from the first data row and every other row must match.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..geometry import InputError, SiteSet

__all__ = ["PointsParseError", "parse_points", "write_points"]


class PointsParseError(InputError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def parse_points(path) -> SiteSet:
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with path.open(newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            fields = next(csv.reader([text]))
            try:
                vals = [float(v) for v in fields]
            except ValueError as exc:
                raise PointsParseError(path, lineno, f"non-numeric field ({exc})") from None
            if not all(math.isfinite(v) for v in vals):
                raise PointsParseError(path, lineno, "non-finite coordinate")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise PointsParseError(path, lineno, f"expected {width} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise PointsParseError(path, 0, "no points found")
    return SiteSet(np.array(rows))


def write_points(K: SiteSet, path, header: bool = True) -> Path:
    """Write sites with ``repr`` precision so that re-parsing is lossless."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if header:
            fh.write("# " + ",".join(f"x{i + 1}" for i in range(K.dim)) + "\n")
        for p in K.sites:
            fh.write(",".join(repr(float(v)) for v in p) + "\n")
    return path
