"""Discrete optimal transport: exact and entropic solvers, Wasserstein distances.

The central objects are weighted point clouds (:class:`DiscreteMeasure`),
pairwise ground-distance matrices (:class:`CostMatrix`) and transport plans
(:class:`Coupling`).  ``solve_exact`` minimizes ``sum_ij pi_ij * C_ij**p``
over couplings with prescribed marginals; ``solve_entropic`` solves the
entropy-regularized relaxation with log-domain Sinkhorn iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import InputError, SolverError

# Entries at or below this value are floating-point dust from the solver and
# are not counted as transported mass when forming support sets.
DEFAULT_SUPPORT_THRESHOLD = 1e-12

_WEIGHT_SUM_TOL = 1e-9
_MARGINAL_TOL = 1e-8
_MASS_TOL = 1e-10


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DiscreteMeasure:
    """A weighted point cloud ``sum_i w_i * delta(x_i)``.

    Weights are renormalized once at construction so they sum to 1 to within
    a couple of ulps; inputs whose weights are further than 1e-9 from unit
    mass are rejected instead of silently rescaled.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if points.size == 0:
            raise InputError("measure needs at least one point")
        if points.ndim != 2:
            raise InputError(f"points must be a 2-D array, got ndim={points.ndim}")
        if not np.isfinite(points).all():
            raise InputError("measure points contain non-finite coordinates")
        if weights.shape[0] != points.shape[0]:
            raise InputError(
                f"{weights.shape[0]} weights for {points.shape[0]} points"
            )
        if (weights < 0).any():
            raise InputError("weights must be nonnegative")
        total = weights.sum()
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise InputError(f"weights sum to {total!r}, expected 1")
        weights = weights / total
        object.__setattr__(self, "points", _as_readonly(points))
        object.__setattr__(self, "weights", _as_readonly(weights))

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = points.shape[0]
        return cls(points, np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def consolidated(self) -> "DiscreteMeasure":
        """Merge bitwise-identical points, summing their weights.

        The returned measure is the same measure; solving transport on it is
        equivalent and much cheaper when the cloud is highly degenerate.
        """
        uniq, inverse = np.unique(self.points, axis=0, return_inverse=True)
        if uniq.shape[0] == self.n:
            return self
        weights = np.zeros(uniq.shape[0])
        np.add.at(weights, inverse.ravel(), self.weights)
        return DiscreteMeasure(uniq, weights)


@dataclass(frozen=True)
class CostMatrix:
    """Ground distances between two point clouds plus the Wasserstein order.

    ``entries[i, j]`` holds the ground distance d(a_i, b_j); the p-th power
    is applied inside the transport objective, not stored here.
    """

    entries: np.ndarray
    order: float = 2.0

    def __post_init__(self):
        entries = np.atleast_2d(np.asarray(self.entries, dtype=np.float64))
        if not np.isfinite(entries).all():
            raise InputError("cost matrix contains non-finite entries")
        if (entries < 0).any():
            raise InputError("cost matrix entries must be nonnegative")
        if not (np.isfinite(self.order) and self.order >= 1):
            raise InputError(f"order must be a real >= 1, got {self.order!r}")
        object.__setattr__(self, "entries", _as_readonly(entries))
        object.__setattr__(self, "order", float(self.order))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def powered(self) -> np.ndarray:
        """Entrywise p-th power used in the transport objective."""
        if self.order == 1.0:
            return self.entries
        if self.order == 2.0:
            return self.entries * self.entries
        return self.entries ** self.order


@dataclass(frozen=True)
class Coupling:
    """A transport plan: nonnegative matrix with prescribed marginals.

    ``objective`` is the transport cost ``sum_ij matrix_ij * C_ij**p`` the
    producing solver reported (without any entropy term).  ``marginal_tol``
    records the tolerance at which the marginal constraints were enforced;
    the exact solver uses 1e-8, the entropic solver its convergence
    tolerance.
    """

    matrix: np.ndarray
    source_marginal: np.ndarray
    target_marginal: np.ndarray
    objective: float
    marginal_tol: float = field(default=_MARGINAL_TOL)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        src = np.asarray(self.source_marginal, dtype=np.float64).ravel()
        tgt = np.asarray(self.target_marginal, dtype=np.float64).ravel()
        if matrix.shape != (src.shape[0], tgt.shape[0]):
            raise InputError(
                f"coupling shape {matrix.shape} does not match marginals "
                f"({src.shape[0]}, {tgt.shape[0]})"
            )
        if (matrix < 0).any():
            raise SolverError("coupling has negative entries")
        tol = max(self.marginal_tol, _MARGINAL_TOL)
        row_err = np.abs(matrix.sum(axis=1) - src).max()
        col_err = np.abs(matrix.sum(axis=0) - tgt).max()
        if row_err > tol or col_err > tol:
            raise SolverError(
                f"coupling marginals violated: row err {row_err:.3e}, "
                f"col err {col_err:.3e}, tolerance {tol:.3e}"
            )
        if abs(matrix.sum() - 1.0) > _MASS_TOL:
            raise SolverError(f"coupling total mass {matrix.sum()!r} != 1")
        object.__setattr__(self, "matrix", _as_readonly(matrix))
        object.__setattr__(self, "source_marginal", _as_readonly(src))
        object.__setattr__(self, "target_marginal", _as_readonly(tgt))
        object.__setattr__(self, "objective", float(self.objective))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the transport solvers.

    ``support_threshold`` is the minimum coupling entry counted as "mapped"
    when forming support sets downstream.
    """

    method: str = "exact"
    entropic_epsilon: float = 0.05
    max_iterations: int = 50_000
    convergence_tol: float = 1e-9
    support_threshold: float = DEFAULT_SUPPORT_THRESHOLD

    def __post_init__(self):
        if self.method not in ("exact", "entropic"):
            raise InputError(f"unknown solver method {self.method!r}")
        if not self.entropic_epsilon > 0:
            raise InputError("entropic_epsilon must be > 0")
        if not self.convergence_tol > 0:
            raise InputError("convergence_tol must be > 0")
        if self.max_iterations < 1:
            raise InputError("max_iterations must be >= 1")
        if self.support_threshold < 0:
            raise InputError("support_threshold must be >= 0")


def build_cost_matrix(points_a, points_b, order: float = 2.0) -> CostMatrix:
    """Euclidean ground distances between two clouds of outcome vectors.

    ``entries[i, j] = ||points_a[i] - points_b[j]||_2``; ``order`` is the
    Wasserstein order p applied later in the objective.
    """
    a = np.atleast_2d(np.asarray(points_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(points_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise InputError(
            f"point dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise InputError("points contain non-finite coordinates")
    return CostMatrix(cdist(a, b, metric="euclidean"), order)


def _check_problem(m1: DiscreteMeasure, m2: DiscreteMeasure, C: CostMatrix):
    if C.shape != (m1.n, m2.n):
        raise InputError(
            f"cost matrix shape {C.shape} does not match measures "
            f"({m1.n}, {m2.n})"
        )
    imbalance = abs(m1.weights.sum() - m2.weights.sum())
    if imbalance > _WEIGHT_SUM_TOL:
        raise InputError(f"marginal masses differ by {imbalance:.3e}")


def _transport_lp(a: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Solve the transportation LP with the HiGHS dual simplex.

    The basis of an optimal vertex is a spanning tree of the bipartite
    graph, so the returned flows satisfy the marginal equalities to
    machine precision.
    """
    n1, n2 = cost.shape
    var = np.arange(n1 * n2)
    row_idx = np.concatenate([np.repeat(np.arange(n1), n2), n1 + var % n2])
    A = sparse.csr_matrix(
        (np.ones(2 * n1 * n2), (row_idx, np.concatenate([var, var]))),
        shape=(n1 + n2, n1 * n2),
    )
    res = linprog(
        cost.ravel(),
        A_eq=A,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs-ds",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status != 0:
        raise SolverError(
            f"transport LP failed: status {res.status} ({res.message}), "
            f"iterations={getattr(res, 'nit', 'n/a')}"
        )
    plan = res.x.reshape(n1, n2)
    # dual simplex occasionally leaves -0.0 or dust below feasibility tol
    tiny = plan.min()
    if tiny < -1e-9:
        raise SolverError(f"transport LP returned negative mass {tiny:.3e}")
    np.clip(plan, 0.0, None, out=plan)
    return plan


def solve_exact(m1: DiscreteMeasure, m2: DiscreteMeasure, C: CostMatrix) -> Coupling:
    """Minimize ``<pi, C**p>`` over couplings of ``m1`` and ``m2`` exactly.

    Returns an optimal vertex of the transportation polytope.  When several
    couplings are optimal no particular one is promised; only the objective
    value and the marginals are contractual.
    """
    _check_problem(m1, m2, C)
    powered = C.powered()
    plan = _transport_lp(m1.weights, m2.weights, powered)
    objective = float(np.sum(plan * powered))
    return Coupling(plan, m1.weights, m2.weights, objective)


def solve_entropic(
    m1: DiscreteMeasure,
    m2: DiscreteMeasure,
    C: CostMatrix,
    config: SolverConfig,
) -> Coupling:
    """Sinkhorn fixed point of the epsilon-regularized transport problem.

    Runs log-domain iterations (numerically safe for small epsilon) until the
    worst marginal violation falls below ``config.convergence_tol``.  The
    reported objective is ``<pi, C**p>`` without the entropy term.
    """
    _check_problem(m1, m2, C)
    eps = config.entropic_epsilon
    M = C.powered()
    log_a = np.log(m1.weights)
    log_b = np.log(m2.weights)
    f = np.zeros(m1.n)
    g = np.zeros(m2.n)
    err = np.inf
    for it in range(1, config.max_iterations + 1):
        f = eps * (log_a - logsumexp((g[None, :] - M) / eps, axis=1))
        g = eps * (log_b - logsumexp((f[:, None] - M) / eps, axis=0))
        if not (np.isfinite(f).all() and np.isfinite(g).all()):
            raise SolverError(
                f"Sinkhorn scaling underflowed at iteration {it}; "
                f"increase entropic_epsilon (currently {eps:g})"
            )
        if it % 10 == 0 or it == config.max_iterations:
            plan = np.exp((f[:, None] + g[None, :] - M) / eps)
            err = max(
                np.abs(plan.sum(axis=1) - m1.weights).max(),
                np.abs(plan.sum(axis=0) - m2.weights).max(),
            )
            if err <= config.convergence_tol:
                objective = float(np.sum(plan * M))
                return Coupling(
                    plan,
                    m1.weights,
                    m2.weights,
                    objective,
                    marginal_tol=config.convergence_tol,
                )
    raise SolverError(
        f"Sinkhorn did not converge in {config.max_iterations} iterations; "
        f"final marginal error {err:.3e} > tol {config.convergence_tol:.3e}"
    )


def solve(
    m1: DiscreteMeasure,
    m2: DiscreteMeasure,
    C: CostMatrix,
    config: SolverConfig | None = None,
) -> Coupling:
    """Dispatch to ``solve_exact`` or ``solve_entropic`` per the config."""
    config = config or SolverConfig()
    if config.method == "exact":
        return solve_exact(m1, m2, C)
    return solve_entropic(m1, m2, C, config)


def wasserstein(m1: DiscreteMeasure, m2: DiscreteMeasure, C: CostMatrix) -> float:
    """Wasserstein-p distance: p-th root of the exact transport objective."""
    return solve_exact(m1, m2, C).objective ** (1.0 / C.order)


def product_coupling(m1: DiscreteMeasure, m2: DiscreteMeasure, C: CostMatrix | None = None) -> Coupling:
    """The independence coupling ``pi_ij = w1_i * w2_j``.

    Always feasible, generally far from optimal; used as a no-association
    baseline when reading transported-mass shares.
    """
    plan = np.outer(m1.weights, m2.weights)
    objective = float(np.sum(plan * C.powered())) if C is not None else float("nan")
    return Coupling(plan, m1.weights, m2.weights, objective)


def row_conditional(pi: Coupling, i: int) -> np.ndarray:
    """Row ``i`` of the coupling normalized to a probability vector.

    Under uniform source weights this equals ``n1 * pi[i]``: the split of
    source point i's mass over the target points.
    """
    if not 0 <= i < pi.shape[0]:
        raise InputError(f"row index {i} out of range for shape {pi.shape}")
    row = pi.matrix[i]
    total = row.sum()
    if total <= 0:
        raise InputError(f"source point {i} carries zero mass")
    return row / total
