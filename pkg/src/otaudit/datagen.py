"""Synthetic dataset generators writing the same CSV + schema format the
loader consumes.

Two families: a credit-style table with actionable / non-actionable /
immutable feature roles mirroring the usual recourse taxonomy, and a
two-group table with a planted score gap for exercising bias detection.
A best-effort recidivism-style schema is included for reference; its
feature list follows the commonly published nine-column layout.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

CREDIT_SCHEMA = {
    "columns": [
        {"name": "savings", "kind": "numeric", "role": "actionable"},
        {"name": "credit_history", "kind": "categorical", "role": "actionable"},
        {"name": "other_installments", "kind": "numeric", "role": "actionable"},
        {"name": "guarantor", "kind": "categorical", "role": "actionable"},
        {"name": "credit_amount", "kind": "numeric", "role": "non_actionable"},
        {"name": "credit_duration", "kind": "numeric", "role": "non_actionable"},
        {"name": "sex", "kind": "categorical", "role": "immutable", "is_group": True},
        {"name": "age", "kind": "numeric", "role": "immutable", "is_group": True},
        {"name": "label", "kind": "categorical", "is_label": True},
    ],
    "label_positive_value": "good",
}

TWO_GROUP_SCHEMA = {
    "columns": [
        {"name": "score", "kind": "numeric", "role": "actionable"},
        {"name": "group", "kind": "categorical", "role": "immutable", "is_group": True},
        {"name": "label", "kind": "categorical", "is_label": True},
    ],
    "label_positive_value": "pos",
}

# Best-effort column layout for the public recidivism table; the upstream
# feature enumeration is ambiguous, so treat this as a starting point.
RECIDIVISM_SCHEMA = {
    "columns": [
        {"name": "priors_count", "kind": "numeric", "role": "non_actionable"},
        {"name": "age_above_45", "kind": "categorical", "role": "immutable"},
        {"name": "age_below_25", "kind": "categorical", "role": "immutable"},
        {"name": "female", "kind": "categorical", "role": "immutable", "is_group": True},
        {"name": "misdemeanor", "kind": "categorical", "role": "non_actionable"},
        {"name": "ethnicity", "kind": "categorical", "role": "immutable", "is_group": True},
        {"name": "two_year_recid", "kind": "categorical", "is_label": True},
    ],
    "label_positive_value": "1",
    "note": "best-effort layout; verify against your extract before use",
}


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_schema(path: Path, schema: dict) -> None:
    with open(path, "w") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")


def generate_credit(out_dir, n: int = 200, seed: int = 7) -> tuple[Path, Path]:
    """Credit-style table whose label follows the actionable features.

    Good-credit rows have systematically higher savings, so recourse toward
    good-labeled counterparts raises an applicant's score.
    """
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    histories = ["critical", "delayed", "paid"]
    rows = []
    for _ in range(n):
        good = rng.random() < 0.5
        savings = rng.normal(1.5 if good else -1.5, 0.6)
        history = histories[rng.integers(0, 3)]
        installments = rng.normal(0.5 if good else -0.5, 1.0)
        guarantor = "yes" if rng.random() < 0.3 else "none"
        amount = rng.normal(0.0, 1.0)
        duration = rng.normal(0.0, 1.0)
        sex = "female" if rng.random() < 0.5 else "male"
        age = float(rng.integers(18, 76))
        noise = rng.normal(0.0, 0.3)
        label = "good" if savings + 0.4 * installments + noise > 0 else "bad"
        rows.append(
            [
                f"{savings:.6f}", history, f"{installments:.6f}", guarantor,
                f"{amount:.6f}", f"{duration:.6f}", sex, f"{age:.0f}", label,
            ]
        )
    header = [c["name"] for c in CREDIT_SCHEMA["columns"]]
    csv_path = out_dir / "credit.csv"
    schema_path = out_dir / "credit_schema.json"
    _write_csv(csv_path, header, rows)
    _write_schema(schema_path, CREDIT_SCHEMA)
    return csv_path, schema_path


def generate_two_group(
    out_dir,
    n_per_group: int = 60,
    advantaged_shift: float = 0.0,
    suppressed_shift: float = 0.3,
    seed: int = 11,
) -> tuple[Path, Path]:
    """Two groups on a deterministic score grid with a planted offset.

    Group g's scores sit ``suppressed_shift`` above group h's, so under a
    score-threshold truth rule g is the better-qualified group; a policy
    that still rejects g members is suppressing them by construction.  The
    grids are deterministic so audits of this table are exactly
    reproducible; ``seed`` only shuffles row order.
    """
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    span = 0.7
    base = (np.arange(n_per_group) + 0.5) / n_per_group * span
    rows = []
    for score in base + suppressed_shift:
        rows.append([f"{score:.9f}", "g", "pos" if score > 0.5 else "neg"])
    for score in base + advantaged_shift:
        rows.append([f"{score:.9f}", "h", "pos" if score > 0.5 else "neg"])
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    header = [c["name"] for c in TWO_GROUP_SCHEMA["columns"]]
    csv_path = out_dir / "two_group.csv"
    schema_path = out_dir / "two_group_schema.json"
    _write_csv(csv_path, header, rows)
    _write_schema(schema_path, TWO_GROUP_SCHEMA)
    return csv_path, schema_path
