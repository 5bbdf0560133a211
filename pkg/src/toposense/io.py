"""CSV writers for matrices, traces and tables."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    return "nan" if np.isnan(v) else repr(v)


def write_table(path, header: Sequence[str], columns: Sequence) -> Path:
    """Write equal-length columns under a one-line header."""
    path = Path(path)
    columns = [list(c) for c in columns]
    n = {len(c) for c in columns}
    if len(n) > 1:
        raise ValueError(f"columns have different lengths: {sorted(n)}")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])
    return path


def read_table(path) -> dict:
    """Read a CSV written by ``write_table`` into name -> array (strings kept
    for non-numeric columns)."""
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = np.array(col)
    return out


def write_matrix(path, matrix: np.ndarray) -> Path:
    """Full dense matrix, row-major, no header."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(matrix):
            w.writerow([_fmt(v) for v in row])
    return path


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_amplitudes(path, plus: np.ndarray, minus: np.ndarray) -> Path:
    labels = ["emitter"] + [f"site-{n}" for n in range(1, plus.size)]
    return write_table(path, ["index", "label", "amplitude_plus", "amplitude_minus"],
                       [range(plus.size), labels, plus, minus])


def write_trace(path, t, p1) -> Path:
    return write_table(path, ["t", "p1"], [t, p1])
