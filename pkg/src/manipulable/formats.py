"""Stable CSV/JSON emission: fixed column order, 12 significant digits."""

from __future__ import annotations

import dataclasses
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

SIG_DIGITS = 12


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, f".{SIG_DIGITS}g")
    if isinstance(value, (list, tuple)):
        return ";".join(fmt(v) for v in value)
    return str(value)


def to_jsonable(obj):
    """Recursively convert dataclasses/arrays/floats into JSON-ready values, rounding floats."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, tuple) and hasattr(obj, "_asdict"):
        return to_jsonable(obj._asdict())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return fmt(v)
        return float(format(v, f".{SIG_DIGITS}g"))
    return obj


@contextmanager
def _opened(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    with _opened(path) as fh:
        fh.write(dumps_json(obj))


def write_csv(path, header, rows):
    """Write rows under ``header``. A 2-D float array goes through a fast path."""
    with _opened(path) as fh:
        fh.write(",".join(header) + "\n")
        if isinstance(rows, np.ndarray) and rows.dtype.kind == "f":
            for start in range(0, len(rows), 1 << 16):
                block = rows[start:start + (1 << 16)]
                fh.write("".join(
                    ",".join(format(v, ".12g") for v in row) + "\n" for row in block.tolist()
                ))
            return
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
