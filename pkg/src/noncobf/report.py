"""JSON and CSV serialization of evaluation results.

Floats are written with 9 significant digits; zero power in dB is written
as ``-inf``.  Column order is fixed.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .evaluation import StudyResult, to_db

CDF_COLUMNS = ("design", "user", "metric", "value_db", "cdf_prob")
SWEEP_COLUMNS = ("design", "frequency_hz", "gain_db")


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def jsonable(obj):
    """Recursively convert numpy/complex values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else fmt(x)
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n")


def cdf_rows(study: StudyResult, designs: Sequence[str]) -> list[tuple]:
    """Rows ``(design, user, metric, value_db, cdf_prob)``; users are 1-based."""
    rows = []
    for d in designs:
        samples = study.rows.get(d, [])
        if not samples:
            continue
        users = np.array([u for u, _ in samples])
        vals = to_db(np.array([v for _, v in samples]))
        order = np.argsort(vals, kind="stable")
        n = len(order)
        for i, j in enumerate(order, start=1):
            rows.append((d, int(users[j]) + 1, study.metric, float(vals[j]), i / n))
    return rows


def write_cdf_csv(path: Path, rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CDF_COLUMNS)
        for d, u, m, v, p in rows:
            w.writerow([d, u, m, fmt(v), fmt(p)])


def write_sweep_csv(path: Path, rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for d, f, g in rows:
            w.writerow([d, fmt(f), fmt(g)])


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
