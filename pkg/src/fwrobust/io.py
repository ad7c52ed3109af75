"""File formats: gauge descriptors (JSON), samples (CSV) and JSON reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .gauges import from_descriptor
from .solver import WeightedSample

SIG_DIGITS = 12


def load_gauge(path):
    try:
        desc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"gauge file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed gauge JSON in {path}: {exc}") from None
    return from_descriptor(desc)


def load_sample(path) -> WeightedSample:
    """Read ``x1,...,xd,weight`` rows."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise InputError(f"sample file not found: {path}") from None
    if not rows:
        raise InputError("sample file is empty")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != [f"x{i}" for i in range(1, d + 1)] + ["weight"]:
        raise InputError(f"sample header must be x1,...,xd,weight, got {','.join(header)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d + 1:
            raise InputError(f"line {lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise InputError(f"line {lineno}: non-numeric field") from None
    if not data:
        raise InputError("sample has no points")
    arr = np.array(data)
    return WeightedSample(arr[:, :d], arr[:, d])


def write_sample(path, s: WeightedSample) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([f"x{i}" for i in range(1, s.dim + 1)] + ["weight"])
        for p, w in zip(s.points, s.weights):
            wr.writerow([_fmt(v) for v in p] + [_fmt(w)])


def _fmt(x: float) -> str:
    return f"{float(x):.{SIG_DIGITS}g}"


def _round(obj):
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return None
        x = float(_fmt(x))
        return 0.0 if x == 0 else x
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    return obj


def dumps(obj) -> str:
    """JSON text with every float rounded to 12 significant digits."""
    return json.dumps(_round(obj), indent=2) + "\n"

