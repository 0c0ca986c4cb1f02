"""Tabular result files and the JSON metadata sidecar."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_table(path, columns, rows, doc=""):
    """CSV with a leading '#' line documenting the columns, then a header row."""
    path = Path(path)
    with path.open("w") as f:
        f.write(f"# {', '.join(columns)}" + (f": {doc}" if doc else "") + "\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_table(path):
    """Returns (columns, rows) with numeric cells parsed as int or float."""
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: no header row")
    cols = lines[0].split(",")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(cols):
            raise ValueError(f"{path}: row {lineno} has {len(cells)} cells, expected {len(cols)}")
        rows.append(tuple(_parse(c) for c in cells))
    return cols, rows


def _parse(c):
    try:
        return int(c)
    except ValueError:
        pass
    try:
        return float(c)
    except ValueError:
        return {"true": True, "false": False}.get(c, c)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if o is None or isinstance(o, (str, int, bool)):
        return o
    return str(o)


def write_metadata(path, meta: dict):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    return path


_NONFINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def _restore(o):
    if isinstance(o, dict):
        return {k: _restore(v) for k, v in o.items()}
    if isinstance(o, list):
        return [_restore(v) for v in o]
    if isinstance(o, str) and o in _NONFINITE:
        return _NONFINITE[o]
    return o


def read_metadata(path) -> dict:
    """Inverse of write_metadata; the strings 'inf', '-inf', 'nan' become floats."""
    return _restore(json.loads(Path(path).read_text()))
