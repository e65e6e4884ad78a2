"""Coupling-guided recourse.

A source individual's counterparts under the coupling define a barycentric
projection in feature space; interpolating the individual's actionable
features toward that projection and re-scoring under the policy shows how
far achievable feature changes move their classification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .ot import Coupling, _as_readonly
from .policy import Policy, apply_policy

ROLES = ("actionable", "non_actionable", "immutable")


@dataclass(frozen=True)
class FeatureRoles:
    """Role of every encoded feature column.

    One-hot blocks inherit the role of their raw categorical column, so a
    block is always moved (or frozen) as a unit.
    """

    roles: tuple[str, ...]

    def __post_init__(self):
        roles = tuple(self.roles)
        for r in roles:
            if r not in ROLES:
                raise InputError(f"unknown feature role {r!r}")
        if not roles:
            raise InputError("at least one feature column is required")
        object.__setattr__(self, "roles", roles)

    @property
    def n_columns(self) -> int:
        return len(self.roles)

    def mask(self, *wanted: str) -> np.ndarray:
        for w in wanted:
            if w not in ROLES:
                raise InputError(f"unknown feature role {w!r}")
        return np.array([r in wanted for r in self.roles], dtype=bool)

    @property
    def actionable_mask(self) -> np.ndarray:
        return self.mask("actionable")


@dataclass(frozen=True)
class RecourseResult:
    """Re-scored population after interpolating actionable features at one alpha."""

    alpha: float
    new_features: np.ndarray
    good_label_probability: np.ndarray
    reclassified: np.ndarray
    reclassified_fraction: float
    feature_deltas: np.ndarray  # mean change per actionable column, reclassified only

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "new_features", _as_readonly(self.new_features))
        object.__setattr__(
            self, "good_label_probability", _as_readonly(self.good_label_probability)
        )
        rec = np.asarray(self.reclassified, dtype=bool)
        rec.flags.writeable = False
        object.__setattr__(self, "reclassified", rec)
        object.__setattr__(self, "reclassified_fraction", float(self.reclassified_fraction))
        object.__setattr__(self, "feature_deltas", _as_readonly(self.feature_deltas))


def barycentric_projection(
    i: int, pi: Coupling, features_b, mask: np.ndarray
) -> np.ndarray:
    """Coupling-weighted average of counterpart features, on masked columns.

    Computes ``n1 * sum_j pi_ij * b_j`` restricted to ``mask``; under uniform
    source weights this is the expectation of counterpart features under the
    normalized row.
    """
    features_b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    if not 0 <= i < pi.shape[0]:
        raise InputError(f"source index {i} out of range")
    if features_b.shape[0] != pi.shape[1]:
        raise InputError("counterpart feature rows do not match coupling columns")
    w = pi.source_marginal
    if not np.all(w == w[0]):
        raise InputError("barycentric projection requires uniform source weights")
    row = pi.matrix[i]
    if row.sum() <= 0:
        raise InputError(f"source point {i} carries zero mass")
    proj = pi.shape[0] * (row @ features_b)
    return proj[np.asarray(mask)]


def interpolate(a_row, projection, alpha: float, roles: FeatureRoles) -> np.ndarray:
    """Move actionable columns toward the projection; copy everything else.

    alpha = 0 returns the row unchanged (bitwise); alpha = 1 replaces the
    actionable columns with the projection.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must lie in [0, 1], got {alpha!r}")
    a_row = np.asarray(a_row, dtype=np.float64)
    if a_row.shape[0] != roles.n_columns:
        raise InputError("feature row does not match the role table")
    act = roles.actionable_mask
    projection = np.asarray(projection, dtype=np.float64).ravel()
    if projection.shape[0] != int(act.sum()):
        raise InputError("projection length does not match actionable columns")
    out = a_row.copy()
    out[act] = (1.0 - alpha) * a_row[act] + alpha * projection
    return out


def alpha_sweep(
    policy: Policy,
    features_a,
    features_b,
    pi: Coupling,
    alphas,
    roles: FeatureRoles,
    threshold: float = 0.5,
    subset=None,
) -> list[RecourseResult]:
    """Interpolate, re-score and summarize the population at each alpha.

    ``features_a`` are the (encoded) rows of the source individuals aligned
    with the coupling rows; ``subset`` optionally restricts the sweep to some
    of them.  ``reclassified`` marks individuals whose good-label probability
    crosses ``threshold``; feature deltas are averaged over those only.
    """
    features_a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    features_b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    if features_a.shape[0] != pi.shape[0]:
        raise InputError("source features do not match coupling rows")
    if features_a.shape[1] != roles.n_columns:
        raise InputError("feature columns do not match the role table")
    alphas = [float(a) for a in alphas]
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise InputError(f"alpha must lie in [0, 1], got {a!r}")
    if subset is None:
        rows = np.arange(pi.shape[0])
    else:
        rows = np.asarray(subset, dtype=np.int64).ravel()
        if rows.size == 0:
            raise InputError("recourse subset is empty")
        if rows.min() < 0 or rows.max() >= pi.shape[0]:
            raise InputError("recourse subset indexes out of range")

    act = roles.actionable_mask
    n1 = pi.shape[0]
    row_mass = pi.matrix[rows].sum(axis=1)
    if (row_mass <= 0).any():
        raise InputError("recourse subset contains zero-mass source rows")
    projections = n1 * (pi.matrix[rows] @ features_b[:, act])

    base = features_a[rows]
    results = []
    for alpha in alphas:
        new = base.copy()
        new[:, act] = (1.0 - alpha) * base[:, act] + alpha * projections
        probs = apply_policy(policy, new).positive_probability()
        reclassified = probs > threshold
        if reclassified.any():
            deltas = (new[reclassified][:, act] - base[reclassified][:, act]).mean(axis=0)
        else:
            deltas = np.zeros(int(act.sum()))
        results.append(
            RecourseResult(
                alpha=alpha,
                new_features=new,
                good_label_probability=probs,
                reclassified=reclassified,
                reclassified_fraction=float(reclassified.mean()),
                feature_deltas=deltas,
            )
        )
    return results


@dataclass(frozen=True)
class FeatureChangeSummary:
    """Mean signed change per actionable column among the reclassified.

    ``rows`` are dicts {alpha, feature, column, mean_delta, encoding}; the
    ``encoding`` field marks one-hot categorical columns as "partial" since
    interpolation produces fractional block values.  ``empty`` is set when no
    alpha reclassified anyone.
    """

    rows: tuple
    empty: bool

    def to_json(self) -> dict:
        return {"empty": self.empty, "rows": [dict(r) for r in self.rows]}


def feature_change_summary(
    results: list[RecourseResult],
    roles: FeatureRoles,
    column_names=None,
    column_features=None,
    column_kinds=None,
) -> FeatureChangeSummary:
    """Tabulate per-column mean changes among reclassified individuals.

    ``column_names``/``column_features``/``column_kinds`` label encoded
    columns with their display name, owning raw feature and kind; they
    default to positional labels when no encoder metadata is available.
    """
    act_idx = np.flatnonzero(roles.actionable_mask)
    n_cols = roles.n_columns
    if column_names is None:
        column_names = [f"col{j}" for j in range(n_cols)]
    if column_features is None:
        column_features = list(column_names)
    if column_kinds is None:
        column_kinds = ["numeric"] * n_cols
    if any(r.reclassified.any() for r in results):
        rows = []
        for r in results:
            if not r.reclassified.any():
                continue
            for k, j in enumerate(act_idx):
                kind = column_kinds[j]
                rows.append(
                    {
                        "alpha": r.alpha,
                        "feature": column_features[j],
                        "column": column_names[j],
                        "mean_delta": float(r.feature_deltas[k]),
                        "encoding": "partial" if kind == "categorical" else "numeric",
                    }
                )
        return FeatureChangeSummary(tuple(rows), empty=False)
    return FeatureChangeSummary((), empty=True)
