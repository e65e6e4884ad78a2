"""Tabular ingestion: schema-driven CSV loading, encoding and partitioning.

Raw columns are declared in a JSON schema config (name, numeric/categorical
kind, feature role, group/label flags).  Categoricals are one-hot encoded in
lexicographic category order; numeric columns are z-scored with the
population (N-denominator) standard deviation.  Rows with missing cells are
rejected: silent imputation would corrupt an audit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .ot import _as_readonly
from .policy import encoder_fingerprint_of
from .recourse import ROLES, FeatureRoles

MISSING_TOKENS = ("", "NA")
KINDS = ("numeric", "categorical")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    role: str | None = None
    is_group: bool = False
    is_label: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.is_label:
            return
        if self.role is None:
            raise InputError(f"feature column {self.name!r} has no role")
        if self.role not in ROLES:
            raise InputError(f"column {self.name!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class SchemaConfig:
    columns: tuple[ColumnSpec, ...]
    label_positive_value: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "SchemaConfig":
        try:
            cols = tuple(
                ColumnSpec(
                    name=c["name"],
                    kind=c["kind"],
                    role=c.get("role"),
                    is_group=bool(c.get("is_group", False)),
                    is_label=bool(c.get("is_label", False)),
                )
                for c in doc["columns"]
            )
        except KeyError as exc:
            raise InputError(f"schema config missing key {exc}") from exc
        labels = [c for c in cols if c.is_label]
        if len(labels) > 1:
            raise InputError("schema config declares more than one label column")
        return cls(cols, doc.get("label_positive_value"))

    @classmethod
    def load(cls, path) -> "SchemaConfig":
        path = Path(path)
        if not path.exists():
            raise InputError(f"schema config not found: {path}")
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class EncodedColumn:
    """Where a raw feature landed in the encoded matrix."""

    feature: str
    kind: str
    start: int
    stop: int
    categories: tuple[str, ...] = ()
    mean: float = 0.0
    std: float = 1.0
    constant: bool = False


@dataclass(frozen=True)
class Dataset:
    """Immutable encoded table plus everything needed to interpret it."""

    schema: SchemaConfig
    encoded: np.ndarray
    encoder: tuple[EncodedColumn, ...]
    raw: dict
    labels: np.ndarray | None
    roles: FeatureRoles
    encoded_column_names: tuple[str, ...]
    group_columns: tuple[str, ...]
    label_column: str | None
    constant_columns: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "encoded", _as_readonly(self.encoded))
        if self.labels is not None:
            lab = np.asarray(self.labels)
            lab.flags.writeable = False
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.encoded.shape[0]

    @property
    def n_encoded(self) -> int:
        return self.encoded.shape[1]

    def encoder_metadata(self) -> dict:
        return {
            "columns": [
                {
                    "feature": e.feature,
                    "kind": e.kind,
                    "span": [e.start, e.stop],
                    "categories": list(e.categories),
                    "mean": e.mean,
                    "std": e.std,
                }
                for e in self.encoder
            ]
        }

    def fingerprint(self) -> str:
        return encoder_fingerprint_of(self.encoder_metadata())

    def feature_span(self, name: str) -> tuple[int, int]:
        for e in self.encoder:
            if e.feature == name:
                return e.start, e.stop
        raise InputError(f"unknown feature column {name!r}")

    def columns_mask(self, names) -> np.ndarray:
        mask = np.zeros(self.n_encoded, dtype=bool)
        for name in names:
            start, stop = self.feature_span(name)
            mask[start:stop] = True
        return mask

    def role_mask(self, *roles: str) -> np.ndarray:
        return self.roles.mask(*roles)

    def encoded_kinds(self) -> list[str]:
        kinds = ["numeric"] * self.n_encoded
        for e in self.encoder:
            for j in range(e.start, e.stop):
                kinds[j] = e.kind
        return kinds

    def encoded_features(self) -> list[str]:
        feats = [""] * self.n_encoded
        for e in self.encoder:
            for j in range(e.start, e.stop):
                feats[j] = e.feature
        return feats


def _parse_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file, expected a header row") from None
        rows = [row for row in reader]
    for k, row in enumerate(rows):
        if len(row) != len(header):
            raise InputError(
                f"{path}: row {k + 2} has {len(row)} cells, header has {len(header)}"
            )
    return header, rows


def load_csv(path, schema) -> Dataset:
    """Load, validate, encode and normalize a CSV file against its schema.

    ``schema`` may be a :class:`SchemaConfig`, a dict, or a path to a JSON
    document.  Row order is preserved.  Unknown columns (either direction)
    and missing cells are hard errors.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"data file not found: {path}")
    if isinstance(schema, (str, Path)):
        schema = SchemaConfig.load(schema)
    elif isinstance(schema, dict):
        schema = SchemaConfig.from_dict(schema)
    header, rows = _parse_rows(path)

    declared = {c.name for c in schema.columns}
    present = set(header)
    for name in sorted(declared - present):
        raise InputError(f"schema names column {name!r} absent from {path}")
    undeclared = sorted(present - declared)
    if undeclared:
        raise InputError(
            f"{path} has columns with no schema entry (every feature needs a "
            f"role): {', '.join(undeclared)}"
        )
    col_of = {name: header.index(name) for name in header}

    missing_rows = sorted(
        {
            k + 2
            for k, row in enumerate(rows)
            for cell in row
            if cell.strip() in MISSING_TOKENS
        }
    )
    if missing_rows:
        raise InputError(
            f"{path}: rows with missing cells are rejected: rows {missing_rows}"
        )
    n = len(rows)
    if n == 0:
        raise InputError(f"{path}: no data rows")

    raw: dict = {}
    for spec in schema.columns:
        cells = [rows[k][col_of[spec.name]].strip() for k in range(n)]
        if spec.kind == "numeric" and not spec.is_label:
            values = np.empty(n)
            for k, cell in enumerate(cells):
                try:
                    values[k] = float(cell)
                except ValueError:
                    raise InputError(
                        f"{path}: cannot parse {cell!r} as numeric at row "
                        f"{k + 2}, column {spec.name!r}"
                    ) from None
            if not np.isfinite(values).all():
                raise InputError(f"{path}: non-finite value in column {spec.name!r}")
            raw[spec.name] = values
        else:
            raw[spec.name] = np.array(cells, dtype=object)

    label_col = next((c.name for c in schema.columns if c.is_label), None)
    labels = None
    if label_col is not None:
        cells = raw[label_col]
        positive = schema.label_positive_value
        if positive is None:
            raise InputError(
                "schema declares a label column but no label_positive_value"
            )
        values = np.array([str(c) for c in cells], dtype=object)
        if str(positive) not in values:
            raise InputError(
                f"label_positive_value {positive!r} never occurs in column "
                f"{label_col!r}"
            )
        labels = (values == str(positive)).astype(np.int64)

    blocks: list[np.ndarray] = []
    encoder: list[EncodedColumn] = []
    names: list[str] = []
    roles: list[str] = []
    constants: list[str] = []
    cursor = 0
    for spec in schema.columns:
        if spec.is_label:
            continue
        if spec.kind == "numeric":
            values = raw[spec.name]
            mean = float(values.mean())
            std = float(values.std())  # population (N-denominator) std
            if std == 0.0:
                constants.append(spec.name)
                encoded = np.zeros(n)
                std_used = 1.0
            else:
                encoded = (values - mean) / std
                std_used = std
            blocks.append(encoded[:, None])
            encoder.append(
                EncodedColumn(
                    spec.name, "numeric", cursor, cursor + 1,
                    mean=mean, std=std_used, constant=std == 0.0,
                )
            )
            names.append(spec.name)
            roles.append(spec.role)
            cursor += 1
        else:
            cells = np.array([str(c) for c in raw[spec.name]], dtype=object)
            categories = tuple(sorted(set(cells)))
            block = np.zeros((n, len(categories)))
            for j, cat in enumerate(categories):
                block[:, j] = cells == cat
            blocks.append(block)
            encoder.append(
                EncodedColumn(
                    spec.name, "categorical", cursor, cursor + len(categories),
                    categories=categories,
                )
            )
            names.extend(f"{spec.name}={cat}" for cat in categories)
            roles.extend([spec.role] * len(categories))
            cursor += len(categories)

    if not blocks:
        raise InputError("schema declares no feature columns")
    encoded = np.hstack(blocks)
    return Dataset(
        schema=schema,
        encoded=encoded,
        encoder=tuple(encoder),
        raw=raw,
        labels=labels,
        roles=FeatureRoles(tuple(roles)),
        encoded_column_names=tuple(names),
        group_columns=tuple(c.name for c in schema.columns if c.is_group),
        label_column=label_col,
        constant_columns=tuple(constants),
    )


def _bin_name(column: str, lo: float, hi: float) -> str:
    def fmt(x: float) -> str:
        return str(int(x)) if float(x).is_integer() else f"{x:g}"

    return f"{column}=[{fmt(lo)},{fmt(hi)})"


def partition_by(dataset: Dataset, column: str, bins=None) -> dict:
    """Disjoint, covering, named index groups from one raw column.

    Categorical columns partition by category.  Numeric columns need a
    binning spec ``[[lo, hi), ...]``; bins must not overlap and must cover
    every observed value.
    """
    if column not in dataset.raw:
        raise InputError(f"unknown partition column {column!r}")
    values = dataset.raw[column]
    if values.dtype == object and bins is None:
        cells = np.array([str(v) for v in values], dtype=object)
        groups = {}
        for cat in sorted(set(cells)):
            groups[f"{column}={cat}"] = np.flatnonzero(cells == cat)
        return groups
    if bins is None:
        raise InputError(f"numeric partition column {column!r} needs bins")
    if values.dtype == object:
        raise InputError(f"bins only apply to numeric columns, {column!r} is not")
    values = np.asarray(values, dtype=np.float64)
    edges = [(float(lo), float(hi)) for lo, hi in bins]
    for lo, hi in edges:
        if not hi > lo:
            raise InputError(f"empty bin [{lo}, {hi})")
    for (lo1, hi1) in edges:
        for (lo2, hi2) in edges:
            if (lo1, hi1) < (lo2, hi2) and lo2 < hi1 and lo1 < hi2:
                raise InputError(
                    f"overlapping bins [{lo1},{hi1}) and [{lo2},{hi2})"
                )
    assigned = np.zeros(dataset.n, dtype=bool)
    groups = {}
    for lo, hi in sorted(edges):
        mask = (values >= lo) & (values < hi)
        groups[_bin_name(column, lo, hi)] = np.flatnonzero(mask)
        assigned |= mask
    if not assigned.all():
        stray = values[~assigned]
        raise InputError(
            f"bins do not cover column {column!r}: value {stray[0]!r} unbinned"
        )
    return {k: v for k, v in groups.items() if v.size}


def cross_partitions(first: dict, second: dict, sep: str = " & ") -> dict:
    """Cross two partitions of the same index set; empty cells are dropped."""
    crossed = {}
    for name_a, idx_a in first.items():
        in_a = set(np.asarray(idx_a).tolist())
        for name_b, idx_b in second.items():
            common = np.array(
                sorted(in_a.intersection(np.asarray(idx_b).tolist())), dtype=np.int64
            )
            if common.size:
                crossed[f"{name_a}{sep}{name_b}"] = common
    return crossed


def split(n_or_dataset, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled train/test index split."""
    n = n_or_dataset.n if isinstance(n_or_dataset, Dataset) else int(n_or_dataset)
    if not 0.0 < fraction < 1.0:
        raise InputError(f"fraction must lie strictly in (0, 1), got {fraction!r}")
    n_train = int(round(n * fraction))
    if n_train < 1 or n_train >= n:
        raise InputError(
            f"degenerate split: {n_train} train rows out of {n}"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:n_train], perm[n_train:]
