"""CSV output with fixed column order and 6-significant-digit floats."""

from __future__ import annotations

import csv
import io
import math
import sys
from typing import Iterable, Sequence


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".6g")
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def render_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("columns are required for an empty row set")
        columns = list(rows[0].keys())
    for r in rows:
        if set(r.keys()) != set(columns):
            raise ValueError("rows must share the same columns")
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows: Iterable[dict], path: str, columns: Sequence[str] | None = None) -> None:
    """Write ``rows`` to ``path`` (``-`` for stdout)."""
    text = render_csv(list(rows), columns)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
