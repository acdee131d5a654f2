"""Deterministic JSON and CSV rendering for command output."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

SIGNIFICANT_DIGITS = 12


def _round_float(x: float) -> float | None:
    if not math.isfinite(x):
        return None
    y = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if y == 0.0 else y


def normalize(obj: Any) -> Any:
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        return _round_float(float(obj))
    if isinstance(obj, complex):
        return [_round_float(obj.real), _round_float(obj.imag)]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(normalize(obj), indent=2, ensure_ascii=False) + "\n"


def format_cell(value: Any) -> str:
    value = normalize(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()
