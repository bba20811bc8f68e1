"""JSON and CSV serialisation with reproducible byte output.

Reals are written with 17 significant digits; NaN and infinities become
``null``.  Keys keep insertion order so identical inputs give identical
bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .domain import Field, Grid, field_like

__all__ = [
    "dumps",
    "dump",
    "load_json",
    "field_to_dict",
    "field_from_dict",
    "write_field",
    "read_field",
    "frame_to_dict",
    "frame_from_dict",
    "csv_text",
]


def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _encode(obj, indent: int | None, level: int) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # flat numeric lists stay on one line to keep field files compact
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, None, 0) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def dump(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8", newline="\n")


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def field_to_dict(f: Field) -> dict:
    """Row-major values over the full lattice, ``None`` at unmasked nodes."""
    g = f.grid
    k = f.components
    flat = np.full((g.n * g.n, k), np.nan)
    flat[g.flat] = f.values.reshape(-1, k)
    if k == 1:
        values = [None if np.isnan(v) else float(v) for v in flat[:, 0]]
    else:
        values = [None if np.isnan(row[0]) else [float(x) for x in row] for row in flat]
    return {"grid": g.descriptor(), "components": k, "values": values}


def field_from_dict(d: dict) -> Field:
    g = Grid.from_descriptor(d["grid"])
    k = int(d.get("components", 1))
    vals = d["values"]
    if len(vals) != g.n * g.n:
        raise ValueError(f"expected {g.n * g.n} lattice values, got {len(vals)}")
    present = np.array([v is not None for v in vals])
    if not np.array_equal(present, g.mask.ravel()):
        raise ValueError("null pattern does not match the grid mask")
    arr = np.array([v for v in vals if v is not None], dtype=float)
    if k > 1 and arr.shape[1:] != (k,):
        raise ValueError(f"expected {k} components per node")
    # masked nodes are stored in C order, which is also the file order
    return field_like(g, arr)


def write_field(f: Field, path) -> None:
    dump(field_to_dict(f), path)


def read_field(path) -> Field:
    return field_from_dict(load_json(path))


def frame_to_dict(frame) -> dict:
    return {"e1": field_to_dict(frame.e1), "e2": field_to_dict(frame.e2), "u": field_to_dict(frame.u)}


def frame_from_dict(d: dict):
    """Frame from ``{"e1", "e2"[, "u"]}`` field dicts; ``u`` is recomputed when absent."""
    from .frames import Frame

    e1 = field_from_dict(d["e1"])
    e2 = field_from_dict(d["e2"])
    if e1.grid != e2.grid:
        raise ValueError("frame fields must share a grid")
    u = field_from_dict(d["u"]).values if "u" in d else None
    return Frame.from_arrays(e1.grid, e1.values, e2.values, u)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
