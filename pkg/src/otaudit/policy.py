"""Probabilistic policies over tabular features and parity-based baselines.

A policy maps encoded feature rows to points on the outcome simplex.  The
bundled trainer is a deterministic full-batch gradient-descent logistic
regression; parity metrics (disparate impact, demographic parity difference,
equal opportunity) are provided as the conventional baselines the transport
audit is compared against.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InputError, SolverError
from .ot import DiscreteMeasure, _as_readonly

_GRAD_TOL = 1e-6
_MAX_ITER = 10_000


@dataclass(frozen=True)
class Policy:
    """Linear-logistic policy: row x maps to (1 - s, s) with s = sigmoid(w.x + b)."""

    weights: np.ndarray
    intercept: float
    class_labels: tuple[str, str] = ("0", "1")
    encoder_fingerprint: str | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if not np.isfinite(w).all() or not np.isfinite(self.intercept):
            raise InputError("policy parameters must be finite")
        if len(self.class_labels) != 2:
            raise InputError("binary policies need exactly two class labels")
        object.__setattr__(self, "weights", _as_readonly(w))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "class_labels", tuple(str(c) for c in self.class_labels))

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.weights.shape[0]:
            raise InputError(
                f"feature dimension {X.shape[1]} does not match policy "
                f"dimension {self.weights.shape[0]}"
            )
        return expit(X @ self.weights + self.intercept)

    def to_json(self) -> dict:
        return {
            "class_labels": list(self.class_labels),
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "encoder_fingerprint": self.encoder_fingerprint,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Policy":
        try:
            return cls(
                weights=np.asarray(doc["weights"], dtype=np.float64),
                intercept=float(doc["intercept"]),
                class_labels=tuple(doc["class_labels"]),
                encoder_fingerprint=doc.get("encoder_fingerprint"),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed policy document: {exc}") from exc


@dataclass(frozen=True)
class OutcomeSet:
    """Simplex-valued outcomes for a set of individuals, row-aligned to ids."""

    outcomes: np.ndarray
    source_ids: np.ndarray

    def __post_init__(self):
        out = np.atleast_2d(np.asarray(self.outcomes, dtype=np.float64))
        ids = np.asarray(self.source_ids)
        if ids.shape[0] != out.shape[0]:
            raise InputError("source_ids must align with outcome rows")
        if (out < -1e-12).any() or (out > 1 + 1e-12).any():
            raise InputError("outcome entries must lie in [0, 1]")
        if np.abs(out.sum(axis=1) - 1.0).max() > 1e-12:
            raise InputError("outcome rows must sum to 1")
        object.__setattr__(self, "outcomes", _as_readonly(out))
        ids.flags.writeable = False
        object.__setattr__(self, "source_ids", ids)

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    def positive_probability(self) -> np.ndarray:
        return self.outcomes[:, 1]


@dataclass(frozen=True)
class DisparateImpact:
    """Positive-rate ratio with the 80%-rule flag.

    ``ratio`` follows the convention positive_rate(group 1) /
    positive_rate(group 0); ``degenerate`` marks the trivially-rejecting
    case (no positives in either group), reported as a fair 1.0.
    """

    ratio: float
    admits_disparate_impact: bool
    degenerate: bool = False
    convention: str = "positive_rate(group=1) / positive_rate(group=0)"


@dataclass(frozen=True)
class ParityReport:
    disparate_impact: DisparateImpact
    ddp: float
    equal_opportunity_gap: float | None
    group_rates: dict = field(default_factory=dict)


def _loss_grad(X, y, w, b, l2):
    z = X @ w + b
    p = expit(z)
    # stable cross-entropy: log(1 + e^z) - y*z
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))
    resid = p - y
    gw = X.T @ resid / X.shape[0] + l2 * w
    gb = float(resid.mean())
    return loss, gw, gb


def logistic_gradient(X, y, w, b, l2: float = 0.0):
    """Analytic gradient of the regularized logistic loss (weights, intercept).

    Exposed so tests can check it against finite differences; the intercept
    is not penalized.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    _, gw, gb = _loss_grad(X, y, np.asarray(w, dtype=np.float64), float(b), l2)
    return gw, gb


def logistic_loss(X, y, w, b, l2: float = 0.0) -> float:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    loss, _, _ = _loss_grad(X, y, np.asarray(w, dtype=np.float64), float(b), l2)
    return loss


def train_logistic(
    X,
    y,
    l2: float = 1e-4,
    seed: int = 0,
    max_iterations: int = _MAX_ITER,
    tol: float = _GRAD_TOL,
    class_labels: tuple[str, str] = ("0", "1"),
    encoder_fingerprint: str | None = None,
) -> Policy:
    """Fit a logistic policy by deterministic full-batch gradient descent.

    Minimizes the L2-regularized negative log-likelihood (intercept
    unpenalized) with backtracking line search until the gradient norm falls
    below ``tol``.  Parameters start at zero, so training is bit-reproducible;
    ``seed`` is accepted for interface stability but does not influence the
    fit.
    """
    del seed
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise InputError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise InputError("need at least two training rows")
    if not np.isfinite(X).all():
        raise InputError("training features contain non-finite values")
    classes = np.unique(y)
    if not np.isin(classes, (0.0, 1.0)).all():
        raise InputError(f"labels must be binary 0/1, got {classes}")
    if classes.shape[0] < 2:
        raise InputError("training labels contain a single class")
    if l2 < 0:
        raise InputError("l2 must be nonnegative")

    w = np.zeros(X.shape[1])
    b = 0.0
    step = 1.0
    loss, gw, gb = _loss_grad(X, y, w, b, l2)
    for _ in range(max_iterations):
        grad_norm = float(np.sqrt(np.dot(gw, gw) + gb * gb))
        if grad_norm <= tol:
            return Policy(w, b, class_labels, encoder_fingerprint)
        # Armijo backtracking along the steepest-descent direction
        step = min(step * 2.0, 1e6)
        sq = grad_norm * grad_norm
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = _loss_grad(X, y, w_new, b_new, l2)
            if loss_new <= loss - 1e-4 * step * sq or step < 1e-18:
                break
            step *= 0.5
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
    grad_norm = float(np.sqrt(np.dot(gw, gw) + gb * gb))
    raise SolverError(
        f"gradient descent did not converge in {max_iterations} iterations; "
        f"final gradient norm {grad_norm:.3e}"
    )


def apply_policy(policy: Policy, X, ids=None) -> OutcomeSet:
    """Score feature rows, returning (P(label 0), P(label 1)) per row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    s = policy.scores(X)
    outcomes = np.column_stack([1.0 - s, s])
    if ids is None:
        ids = np.arange(X.shape[0])
    return OutcomeSet(outcomes, np.asarray(ids))


def empirical_outcome_measure(outcomes: OutcomeSet) -> DiscreteMeasure:
    """Uniform measure over the outcome vectors of a sample."""
    return DiscreteMeasure.uniform(outcomes.outcomes)


def _group_masks(group) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(group).ravel()
    mask1 = g.astype(bool) if g.dtype != bool else g
    mask0 = ~mask1
    if not mask0.any() or not mask1.any():
        raise InputError("both groups must be nonempty")
    return mask0, mask1


def disparate_impact_ratio(predictions, group, threshold: float = 0.8) -> DisparateImpact:
    """Positive-rate ratio between the two groups, flagged at the 80% rule.

    ``group`` is binary; the ratio is rate(group 1) / rate(group 0).  A zero
    denominator with a positive numerator yields ``inf`` (flagged); two
    all-negative groups are the trivially-rejecting policy and yield a
    degenerate-flagged 1.0.
    """
    preds = np.asarray(predictions, dtype=np.float64).ravel()
    mask0, mask1 = _group_masks(group)
    rate0 = float(preds[mask0].mean())
    rate1 = float(preds[mask1].mean())
    if rate0 == 0.0 and rate1 == 0.0:
        return DisparateImpact(1.0, False, degenerate=True)
    if rate0 == 0.0:
        return DisparateImpact(float("inf"), False, degenerate=True)
    ratio = rate1 / rate0
    return DisparateImpact(ratio, ratio <= threshold)


def demographic_parity_difference(scores, group) -> float:
    """E[h(X) | group 1] - E[h(X) | group 0]; accepts hard labels or scores."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    mask0, mask1 = _group_masks(group)
    return float(s[mask1].mean() - s[mask0].mean())


def equal_opportunity_gap(predictions, truth, group) -> float:
    """TPR(group 1) - TPR(group 0)."""
    preds = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    mask0, mask1 = _group_masks(group)
    tprs = []
    for name, mask in (("0", mask0), ("1", mask1)):
        pos = mask & (t == 1.0)
        if not pos.any():
            raise InputError(f"group {name} has no truth-positive individuals")
        tprs.append(float(preds[pos].mean()))
    return tprs[1] - tprs[0]


def parity_report(predictions, group, truth=None) -> ParityReport:
    """Bundle the parity baselines for one prediction vector."""
    preds = np.asarray(predictions, dtype=np.float64).ravel()
    mask0, mask1 = _group_masks(group)
    di = disparate_impact_ratio(preds, group)
    ddp = demographic_parity_difference(preds, group)
    rates = {
        "group0": {"positive_rate": float(preds[mask0].mean())},
        "group1": {"positive_rate": float(preds[mask1].mean())},
    }
    eo = None
    if truth is not None:
        t = np.asarray(truth, dtype=np.float64).ravel()
        eo = equal_opportunity_gap(preds, t, group)
        for name, mask in (("group0", mask0), ("group1", mask1)):
            pos = mask & (t == 1.0)
            rates[name]["true_positive_rate"] = (
                float(preds[pos].mean()) if pos.any() else None
            )
    return ParityReport(di, ddp, eo, rates)


def encoder_fingerprint_of(metadata: dict) -> str:
    """Stable fingerprint of an encoding so policies reject foreign datasets."""
    blob = json.dumps(metadata, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
