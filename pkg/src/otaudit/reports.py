"""Report writers: JSON documents and delimited matrices/long tables.

File bodies are deterministic for a fixed config and seed: keys keep
insertion order, floats use repr, and nothing timestamp-like is embedded.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ot import Coupling


def write_json(path, doc: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, allow_nan=True)
        fh.write("\n")
    return path


def write_rows_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_matrix_csv(path, matrix, row_names, col_names, corner: str = "") -> Path:
    matrix = np.asarray(matrix)
    rows = [
        [name] + [repr(float(v)) for v in matrix[i]]
        for i, name in enumerate(row_names)
    ]
    return write_rows_csv(path, [corner] + list(col_names), rows)


def write_coupling_csv(path, coupling: Coupling, threshold: float) -> Path:
    """Sparse (i, j, mass) dump of every coupling entry above the threshold."""
    i_idx, j_idx = np.nonzero(coupling.matrix > threshold)
    rows = [
        [int(i), int(j), repr(float(coupling.matrix[i, j]))]
        for i, j in zip(i_idx, j_idx)
    ]
    return write_rows_csv(path, ["i", "j", "mass"], rows)


def write_recourse_long_csv(path, results, ids) -> Path:
    """Long-format (alpha, individual_id, probability) table for plotting."""
    rows = []
    for r in results:
        for ind, p in zip(ids, r.good_label_probability):
            rows.append([repr(float(r.alpha)), int(ind), repr(float(p))])
    return write_rows_csv(path, ["alpha", "individual_id", "probability"], rows)
