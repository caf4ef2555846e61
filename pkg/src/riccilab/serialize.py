"""Byte-stable trace CSV, u-snapshot sidecar and report JSON.

Formats
-------
Trace CSV columns, in order: ``step,t,lambda1,total_area,max_dev,min_corner_angle``;
floats with 12 significant digits, LF line endings.

The u sidecar holds one row per sample and one column per vertex, floats
with 17 significant digits so a trace can be rebuilt exactly.

Report JSON keeps insertion order, indents by two spaces and writes every
float with 17 significant digits; non-finite floats become ``null``.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

TRACE_COLUMNS = ("step", "t", "lambda1", "total_area", "max_dev", "min_corner_angle")


def _g(x, digits):
    return format(float(x), f".{digits}g")


def trace_csv(trace) -> str:
    rows = [",".join(TRACE_COLUMNS)]
    for s in trace.samples:
        rows.append(",".join([str(s.step)] + [_g(v, 12) for v in (
            s.t, s.lambda1, s.total_area, s.max_dev, s.min_corner_angle)]))
    return "\n".join(rows) + "\n"


def u_snapshots_csv(trace) -> str:
    return "".join(",".join(_g(v, 17) for v in s.u) + "\n" for s in trace.samples)


def read_u_snapshots(text: str) -> np.ndarray:
    return np.array([[float(v) for v in ln.split(",")] for ln in text.splitlines() if ln])


def sidecar_path(trace_csv_path: str) -> str:
    stem = trace_csv_path[:-4] if trace_csv_path.endswith(".csv") else trace_csv_path
    return stem + ".u.csv"


def _dump(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        text = format(x, ".17g")
        if not any(ch in text for ch in ".en"):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_dump(str(k), indent, level + 1)}: {_dump(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats and stable layout."""
    return _dump(obj, indent, 0) + "\n"


def write_text(path, text: str):
    """Write ASCII text with LF endings, creating the parent directory."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
