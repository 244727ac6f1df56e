"""Plain CSV reading and writing.

All files are comma-separated, ``.`` decimal, one header row, LF line
endings.  Floats are written with ``repr`` so they round-trip exactly.
"""
import csv
import math
from pathlib import Path

import numpy as np

from .errors import ParseError


def write_columns(path, header, columns):
    """Write equal-length 1-D ``columns`` under ``header``."""
    cols = [np.asarray(c) for c in columns]
    if len({len(c) for c in cols}) > 1:
        raise ValueError("columns differ in length")
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*(c.tolist() for c in cols)):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return path


def read_columns(path, expect=None):
    """Read a numeric CSV into ``(header, array)``.

    ``expect`` optionally pins the number of columns.  Malformed rows raise
    :class:`ParseError` carrying the 1-based line number.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", path=path, line=1) from None
        header = [h.strip() for h in header]
        ncol = expect or len(header)
        if len(header) != ncol:
            raise ParseError(f"{path}:1: expected {ncol} columns, got {len(header)}",
                             path=path, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise ParseError(f"{path}:{lineno}: expected {ncol} fields, got {len(row)}",
                                 path=path, line=lineno)
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric field in {row!r}",
                                 path=path, line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(f"{path}:{lineno}: non-finite value", path=path, line=lineno)
            rows.append(vals)
    arr = np.array(rows, dtype=float).reshape(-1, ncol)
    return header, arr
