"""Coupling-derived bias metrics.

Once an optimal coupling between two outcome clouds exists, each source
individual's bias is the transported-mass-weighted feature distance to the
counterparts the coupling assigns them.  Group bias sums individual biases
and decomposes additively over a partition of the target sample, exposing
which target groups absorbed a source group's mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateInputWarning, InputError
from .ot import DEFAULT_SUPPORT_THRESHOLD, Coupling, _as_readonly

CONVENTIONS = ("expectation", "mass_weighted")


@dataclass(frozen=True)
class FeatureMetric:
    """Feature-space ground distance, restricted to a column mask.

    The mask selects encoded columns (e.g. only actionable features) so the
    same coupling can be read against different slices of feature space.
    ``per_individual_max`` divides each source row's distances by that row's
    maximum, the worst-case normalization behind the normalized bias score.
    """

    feature_mask: np.ndarray
    kind: str = "euclidean"
    normalization: str = "none"

    def __post_init__(self):
        if self.kind != "euclidean":
            raise InputError(f"unsupported metric kind {self.kind!r}")
        if self.normalization not in ("none", "per_individual_max"):
            raise InputError(f"unknown normalization {self.normalization!r}")
        mask = np.asarray(self.feature_mask)
        if mask.dtype != bool:
            idx = np.asarray(mask, dtype=np.int64).ravel()
            if idx.size == 0:
                raise InputError("feature mask must select at least one column")
            mask = idx
        elif not mask.any():
            raise InputError("feature mask must select at least one column")
        mask.flags.writeable = False
        object.__setattr__(self, "feature_mask", mask)

    @classmethod
    def full(cls, n_columns: int, normalization: str = "none") -> "FeatureMetric":
        return cls(np.ones(n_columns, dtype=bool), normalization=normalization)

    def _select(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        mask = self.feature_mask
        if mask.dtype == bool:
            if features.shape[1] != mask.shape[0]:
                raise InputError(
                    f"metric mask covers {mask.shape[0]} columns but features "
                    f"have {features.shape[1]}"
                )
            return features[:, mask]
        if mask.max() >= features.shape[1]:
            raise InputError("metric mask indexes past the feature columns")
        return features[:, mask]

    def pairwise(self, features_a, features_b) -> np.ndarray:
        """Distance matrix d(a_i, b_j) on the masked columns."""
        D = cdist(self._select(features_a), self._select(features_b))
        if self.normalization == "per_individual_max":
            row_max = D.max(axis=1, keepdims=True)
            safe = np.where(row_max > 0, row_max, 1.0)
            D = D / safe
        return D


@dataclass(frozen=True)
class BiasReport:
    """Individual biases plus the group-by-group additive decomposition.

    ``decomposition[i, j]`` is the bias of source group i attributable to
    comparisons with target group j; rows sum to the group's total bias.
    ``mass_shares[i, j]`` is the fraction of source group i's transported
    mass landing in target group j; rows sum to 1.
    """

    individual_bias: np.ndarray
    group_bias: np.ndarray
    decomposition: np.ndarray
    mass_shares: np.ndarray
    group_names_a: tuple[str, ...]
    group_names_b: tuple[str, ...]
    convention: str

    def __post_init__(self):
        ib = np.asarray(self.individual_bias, dtype=np.float64)
        gb = np.asarray(self.group_bias, dtype=np.float64)
        dec = np.atleast_2d(np.asarray(self.decomposition, dtype=np.float64))
        shares = np.atleast_2d(np.asarray(self.mass_shares, dtype=np.float64))
        if self.convention not in CONVENTIONS:
            raise InputError(f"unknown convention {self.convention!r}")
        if dec.shape != (len(self.group_names_a), len(self.group_names_b)):
            raise InputError("decomposition shape does not match group names")
        if shares.shape != dec.shape:
            raise InputError("mass_shares shape does not match decomposition")
        if (ib < 0).any() or (gb < 0).any() or (dec < -1e-15).any():
            raise InputError("bias values must be nonnegative")
        if np.abs(dec.sum(axis=1) - gb).max() > 1e-10:
            raise InputError("decomposition rows must sum to the group bias")
        if np.abs(shares.sum(axis=1) - 1.0).max() > 1e-10:
            raise InputError("mass share rows must sum to 1")
        object.__setattr__(self, "individual_bias", _as_readonly(ib))
        object.__setattr__(self, "group_bias", _as_readonly(gb))
        object.__setattr__(self, "decomposition", _as_readonly(dec))
        object.__setattr__(self, "mass_shares", _as_readonly(shares))
        object.__setattr__(self, "group_names_a", tuple(self.group_names_a))
        object.__setattr__(self, "group_names_b", tuple(self.group_names_b))

    def group_bias_by_name(self) -> dict:
        return dict(zip(self.group_names_a, self.group_bias.tolist()))

    def to_json(self) -> dict:
        return {
            "convention": self.convention,
            "group_names_a": list(self.group_names_a),
            "group_names_b": list(self.group_names_b),
            "group_bias": self.group_bias.tolist(),
            "decomposition": self.decomposition.tolist(),
            "mass_shares": self.mass_shares.tolist(),
            "individual_bias": self.individual_bias.tolist(),
        }


def support_set(
    pi: Coupling, i: int, threshold: float = DEFAULT_SUPPORT_THRESHOLD
) -> np.ndarray:
    """Target indices receiving more than ``threshold`` mass from source i."""
    if not 0 <= i < pi.shape[0]:
        raise InputError(f"source index {i} out of range for shape {pi.shape}")
    return np.flatnonzero(pi.matrix[i] > threshold)


def _uniform_source(pi: Coupling) -> bool:
    w = pi.source_marginal
    return bool(np.all(w == w[0]))


def _row_bias(d_row: np.ndarray, pi: Coupling, i: int, convention: str) -> float:
    if convention not in CONVENTIONS:
        raise InputError(f"unknown convention {convention!r}")
    row = pi.matrix[i]
    mass = row.sum()
    if mass <= 0:
        raise InputError(f"source point {i} carries zero mass")
    weighted = float(np.dot(d_row, row))
    if convention == "mass_weighted":
        return weighted
    # Expectation under the normalized row. For uniform source weights the
    # normalizer is exactly n1, which keeps expectation == n1 * mass_weighted
    # bitwise; otherwise divide by the realized row mass.
    if _uniform_source(pi):
        return weighted * pi.shape[0]
    return weighted / mass


def individual_bias(
    i: int,
    pi: Coupling,
    features_a,
    features_b,
    metric: FeatureMetric,
    convention: str = "mass_weighted",
) -> float:
    """Transported-mass-weighted feature distance from individual i.

    ``expectation`` averages distances under the normalized coupling row;
    ``mass_weighted`` sums raw transported mass times distance (the
    finite-sample form whose group sums decompose additively).  Under
    uniform source weights, expectation = n1 * mass_weighted.
    """
    features_a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    if not 0 <= i < pi.shape[0]:
        raise InputError(f"source index {i} out of range")
    if features_a.shape[0] != pi.shape[0]:
        raise InputError("source feature rows do not match coupling rows")
    d_row = metric.pairwise(features_a[i : i + 1], features_b)[0]
    if d_row.shape[0] != pi.shape[1]:
        raise InputError("target feature rows do not match coupling columns")
    return _row_bias(d_row, pi, i, convention)


def normalized_individual_bias(
    i: int, pi: Coupling, features_a, features_b, metric: FeatureMetric
) -> float:
    """Individual bias normalized by the individual's worst-case distance.

    Returns ``n1 * sum_j pi_ij d(a_i, b_j) / max_j d(a_i, b_j)``, in [0, 1]
    under uniform source weights.  When every counterpart is at distance
    zero there is no worst case; 0 is returned under a degeneracy warning.
    """
    features_a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    if not 0 <= i < pi.shape[0]:
        raise InputError(f"source index {i} out of range")
    d_row = metric.pairwise(features_a[i : i + 1], features_b)[0]
    d_max = d_row.max()
    if d_max == 0.0:
        warnings.warn(
            f"individual {i} is at distance zero from every counterpart; "
            "normalized bias reported as 0",
            DegenerateInputWarning,
            stacklevel=2,
        )
        return 0.0
    weighted = float(np.dot(d_row, pi.matrix[i]))
    return pi.shape[0] * weighted / d_max


def group_bias(
    G,
    pi: Coupling,
    features_a,
    features_b,
    metric: FeatureMetric,
    convention: str = "mass_weighted",
) -> float:
    """Sum of individual biases over a source group."""
    idx = np.asarray(G, dtype=np.int64).ravel()
    if idx.size == 0:
        raise InputError("group must be nonempty")
    features_a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    total = 0.0
    for i in idx:
        total += individual_bias(int(i), pi, features_a, features_b, metric, convention)
    return total


def _validate_partition(partition: dict, n: int, side: str) -> None:
    seen = np.zeros(n, dtype=bool)
    for name, idx in partition.items():
        idx = np.asarray(idx, dtype=np.int64).ravel()
        if idx.size == 0:
            raise InputError(f"{side} partition group {name!r} is empty")
        if idx.min() < 0 or idx.max() >= n:
            raise InputError(f"{side} partition group {name!r} indexes out of range")
        if seen[idx].any():
            raise InputError(f"{side} partition groups overlap at group {name!r}")
        seen[idx] = True
    if not seen.all():
        missing = int((~seen).sum())
        raise InputError(f"{side} partition does not cover {missing} individuals")


def decompose(
    pi: Coupling,
    features_a,
    features_b,
    partition_a: dict,
    partition_b: dict,
    metric: FeatureMetric,
    convention: str = "mass_weighted",
) -> BiasReport:
    """Group-by-group additive decomposition of bias and transported mass.

    ``partition_a`` and ``partition_b`` map group names to disjoint,
    covering index arrays over the source and target samples.
    """
    if convention not in CONVENTIONS:
        raise InputError(f"unknown convention {convention!r}")
    features_a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    features_b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    n1, n2 = pi.shape
    if features_a.shape[0] != n1 or features_b.shape[0] != n2:
        raise InputError("feature tables do not match the coupling shape")
    _validate_partition(partition_a, n1, "source")
    _validate_partition(partition_b, n2, "target")

    D = metric.pairwise(features_a, features_b)
    weighted = D * pi.matrix
    row_mass = pi.matrix.sum(axis=1)
    if (row_mass <= 0).any():
        raise InputError("coupling has zero-mass source rows")
    per_row = weighted.sum(axis=1)
    if convention == "expectation":
        scale = np.full(n1, float(n1)) if _uniform_source(pi) else 1.0 / row_mass
        weighted = weighted * scale[:, None]
        per_row = per_row * scale

    names_a = tuple(partition_a)
    names_b = tuple(partition_b)
    dec = np.zeros((len(names_a), len(names_b)))
    shares = np.zeros_like(dec)
    gbias = np.zeros(len(names_a))
    for ia, ga in enumerate(names_a):
        rows = np.asarray(partition_a[ga], dtype=np.int64)
        gbias[ia] = per_row[rows].sum()
        block_w = weighted[rows]
        block_pi = pi.matrix[rows]
        group_mass = row_mass[rows].sum()
        for ib, gb_name in enumerate(names_b):
            cols = np.asarray(partition_b[gb_name], dtype=np.int64)
            dec[ia, ib] = block_w[:, cols].sum()
            shares[ia, ib] = block_pi[:, cols].sum() / group_mass
    return BiasReport(
        individual_bias=per_row,
        group_bias=gbias,
        decomposition=dec,
        mass_shares=shares,
        group_names_a=names_a,
        group_names_b=names_b,
        convention=convention,
    )
