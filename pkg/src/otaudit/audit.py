"""Audit configuration and the pipelines behind the CLI subcommands.

A single JSON config describes the populations, the policies (trained in
place or loaded from serialized documents), the solver, the feature metric,
the partitions and the recourse grid; each subcommand consumes the parts it
needs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bias as bias_mod
from . import recourse as recourse_mod
from .errors import InputError
from .ingest import Dataset, cross_partitions, load_csv, partition_by
from .ot import (
    CostMatrix,
    Coupling,
    DiscreteMeasure,
    SolverConfig,
    build_cost_matrix,
    product_coupling,
    solve,
)
from .policy import Policy, apply_policy, empirical_outcome_measure, train_logistic


@dataclass(frozen=True)
class DataSource:
    csv: Path
    schema: Path

    @classmethod
    def from_dict(cls, doc: dict, base: Path) -> "DataSource":
        try:
            csv_path = base / doc["csv"]
            schema_path = base / doc["schema"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"data source needs 'csv' and 'schema': {exc}") from exc
        for p in (csv_path, schema_path):
            if not p.exists():
                raise InputError(f"referenced file does not exist: {p}")
        return cls(csv_path, schema_path)


@dataclass(frozen=True)
class PolicySource:
    """Either train in place ({"train": {...}}) or load ({"load": path})."""

    train: dict | None = None
    load: Path | None = None

    @classmethod
    def from_dict(cls, doc: dict, base: Path) -> "PolicySource":
        if "load" in doc:
            path = base / doc["load"]
            if not path.exists():
                raise InputError(f"policy file does not exist: {path}")
            return cls(load=path)
        if "train" in doc:
            opts = doc["train"] or {}
            if not isinstance(opts, dict):
                raise InputError("policy 'train' options must be an object")
            return cls(train=opts)
        raise InputError("policy source needs either 'train' or 'load'")


def _solver_from_dict(doc: dict) -> SolverConfig:
    known = {
        "method", "entropic_epsilon", "max_iterations",
        "convergence_tol", "support_threshold",
    }
    unknown = set(doc) - known
    if unknown:
        raise InputError(f"unknown solver options: {sorted(unknown)}")
    return SolverConfig(**doc)


@dataclass(frozen=True)
class AuditConfig:
    data_a: DataSource
    policy_a: PolicySource
    data_b: DataSource | None = None
    policy_b: PolicySource | None = None
    seed: int = 0
    output_dir: Path = Path("reports")
    order: float = 2.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    metric: dict = field(default_factory=dict)
    convention: str = "mass_weighted"
    partitions_a: tuple = ()
    partitions_b: tuple = ()
    alphas: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    threshold: float = 0.5
    emit_plots: bool = True
    emit_coupling: bool = False

    def __post_init__(self):
        for a in self.alphas:
            if not 0.0 <= float(a) <= 1.0:
                raise InputError(f"alpha grid must lie in [0, 1], got {a!r}")
        if not 0.0 < self.threshold < 1.0:
            raise InputError("decision threshold must lie strictly in (0, 1)")
        if self.convention not in bias_mod.CONVENTIONS:
            raise InputError(f"unknown convention {self.convention!r}")

    @classmethod
    def from_dict(cls, doc: dict, base: Path) -> "AuditConfig":
        if "data_a" not in doc:
            raise InputError("config needs a 'data_a' section")
        if "policy_a" not in doc:
            raise InputError("config needs a 'policy_a' section")
        return cls(
            data_a=DataSource.from_dict(doc["data_a"], base),
            policy_a=PolicySource.from_dict(doc["policy_a"], base),
            data_b=(
                DataSource.from_dict(doc["data_b"], base)
                if "data_b" in doc else None
            ),
            policy_b=(
                PolicySource.from_dict(doc["policy_b"], base)
                if "policy_b" in doc else None
            ),
            seed=int(doc.get("seed", 0)),
            output_dir=base / doc.get("output_dir", "reports"),
            order=float(doc.get("order", 2.0)),
            solver=_solver_from_dict(doc.get("solver", {})),
            metric=doc.get("metric", {}),
            convention=doc.get("convention", "mass_weighted"),
            partitions_a=tuple(doc.get("partitions_a", ())),
            partitions_b=tuple(doc.get("partitions_b", ())),
            alphas=tuple(doc.get("alphas", (0.0, 0.25, 0.5, 0.75, 1.0))),
            threshold=float(doc.get("threshold", 0.5)),
            emit_plots=bool(doc.get("emit_plots", True)),
            emit_coupling=bool(doc.get("emit_coupling", False)),
        )

    @classmethod
    def from_file(cls, path) -> "AuditConfig":
        path = Path(path)
        if not path.exists():
            raise InputError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc, path.parent)


def resolve_policy(source: PolicySource, dataset: Dataset, seed: int) -> Policy:
    """Train a policy on the dataset or load and validate a serialized one."""
    if source.load is not None:
        with open(source.load) as fh:
            policy = Policy.from_json(json.load(fh))
        fp = dataset.fingerprint()
        if policy.encoder_fingerprint and policy.encoder_fingerprint != fp:
            raise InputError(
                f"policy was fit on a different encoding "
                f"({policy.encoder_fingerprint} != {fp})"
            )
        if policy.weights.shape[0] != dataset.n_encoded:
            raise InputError(
                f"policy covers {policy.weights.shape[0]} columns, dataset "
                f"encodes {dataset.n_encoded}"
            )
        return policy

    opts = dict(source.train or {})
    l2 = float(opts.pop("l2", 1e-4))
    exclude = opts.pop("exclude_columns", [])
    label_column = opts.pop("label_column", None)
    positive_value = opts.pop("positive_value", None)
    if opts:
        raise InputError(f"unknown train options: {sorted(opts)}")

    if label_column is None:
        if dataset.labels is None:
            raise InputError("dataset has no label column; cannot train")
        y = dataset.labels
        label_column = dataset.label_column
        positive_value = dataset.schema.label_positive_value
    else:
        if label_column not in dataset.raw:
            raise InputError(f"unknown training label column {label_column!r}")
        if positive_value is None:
            raise InputError(
                f"training on {label_column!r} needs a 'positive_value'"
            )
        cells = np.array([str(v) for v in dataset.raw[label_column]], dtype=object)
        if str(positive_value) not in cells:
            raise InputError(
                f"positive value {positive_value!r} never occurs in "
                f"{label_column!r}"
            )
        y = (cells == str(positive_value)).astype(np.int64)

    keep = ~dataset.columns_mask(exclude) if exclude else np.ones(
        dataset.n_encoded, dtype=bool
    )
    if not keep.any():
        raise InputError("every feature column was excluded from training")
    fitted = train_logistic(
        dataset.encoded[:, keep],
        y,
        l2=l2,
        seed=seed,
        class_labels=_class_labels(dataset, label_column, positive_value),
        encoder_fingerprint=dataset.fingerprint(),
    )
    weights = np.zeros(dataset.n_encoded)
    weights[keep] = fitted.weights
    return Policy(
        weights,
        fitted.intercept,
        fitted.class_labels,
        fitted.encoder_fingerprint,
    )


def _class_labels(dataset: Dataset, label_column, positive_value) -> tuple[str, str]:
    values = {str(v) for v in dataset.raw[label_column]}
    others = sorted(values - {str(positive_value)})
    negative = others[0] if len(others) == 1 else f"not_{positive_value}"
    return (negative, str(positive_value))


@dataclass(frozen=True)
class PreparedAudit:
    """Everything the distance/bias commands share once inputs are resolved."""

    dataset_a: Dataset
    dataset_b: Dataset
    policy_a: Policy
    policy_b: Policy
    measure_a: DiscreteMeasure
    measure_b: DiscreteMeasure
    cost: CostMatrix
    coupling: Coupling


def prepare_audit(config: AuditConfig) -> PreparedAudit:
    ds_a = load_csv(config.data_a.csv, config.data_a.schema)
    ds_b = (
        load_csv(config.data_b.csv, config.data_b.schema)
        if config.data_b is not None else ds_a
    )
    pol_a = resolve_policy(config.policy_a, ds_a, config.seed)
    pol_b = (
        resolve_policy(config.policy_b, ds_b, config.seed)
        if config.policy_b is not None else pol_a
    )
    out_a = apply_policy(pol_a, ds_a.encoded)
    out_b = apply_policy(pol_b, ds_b.encoded)
    m_a = empirical_outcome_measure(out_a)
    m_b = empirical_outcome_measure(out_b)
    cost = build_cost_matrix(m_a.points, m_b.points, config.order)
    coupling = solve(m_a, m_b, cost, config.solver)
    return PreparedAudit(ds_a, ds_b, pol_a, pol_b, m_a, m_b, cost, coupling)


def metric_from_config(dataset: Dataset, metric_cfg: dict) -> bias_mod.FeatureMetric:
    """Build the feature-space metric: role-restricted, column-restricted or full."""
    cfg = dict(metric_cfg or {})
    normalization = cfg.pop("normalization", "none")
    roles = cfg.pop("roles", None)
    columns = cfg.pop("columns", None)
    kind = cfg.pop("kind", "euclidean")
    if cfg:
        raise InputError(f"unknown metric options: {sorted(cfg)}")
    if roles and columns:
        raise InputError("metric config: give 'roles' or 'columns', not both")
    if roles:
        mask = dataset.role_mask(*roles)
        if not mask.any():
            raise InputError(f"no encoded columns carry roles {roles}")
    elif columns:
        mask = dataset.columns_mask(columns)
    else:
        mask = np.ones(dataset.n_encoded, dtype=bool)
    return bias_mod.FeatureMetric(mask, kind=kind, normalization=normalization)


def resolve_partition(
    dataset: Dataset,
    axes,
    prepared: PreparedAudit,
    side: str,
    threshold: float,
) -> dict:
    """Cross the configured partition axes into named disjoint groups.

    Axis forms: {"column": name[, "bins": [[lo, hi], ...]]} partitions on a
    raw column; {"prediction": "a"|"b"} partitions on the hard label the
    chosen policy assigns to this side's rows.
    """
    if not axes:
        return {"all": np.arange(dataset.n)}
    partition = None
    for axis in axes:
        if "column" in axis:
            part = partition_by(dataset, axis["column"], axis.get("bins"))
        elif "prediction" in axis:
            which = axis["prediction"]
            if which not in ("a", "b"):
                raise InputError(f"prediction axis must name policy 'a' or 'b'")
            policy = prepared.policy_a if which == "a" else prepared.policy_b
            scores = policy.scores(dataset.encoded)
            positive = scores > threshold
            neg_name, pos_name = policy.class_labels
            part = {}
            if (~positive).any():
                part[f"pred_{which}={neg_name}"] = np.flatnonzero(~positive)
            if positive.any():
                part[f"pred_{which}={pos_name}"] = np.flatnonzero(positive)
        else:
            raise InputError(f"partition axis needs 'column' or 'prediction': {axis}")
        partition = part if partition is None else cross_partitions(partition, part)
    if not partition:
        raise InputError(f"{side} partition came out empty")
    return partition


def run_distance(config: AuditConfig) -> tuple[dict, PreparedAudit]:
    prepared = prepare_audit(config)
    w = prepared.coupling.objective ** (1.0 / config.order)
    report = {
        "wasserstein": w,
        "objective": prepared.coupling.objective,
        "order": config.order,
        "solver": {
            "method": config.solver.method,
            "n_source": prepared.measure_a.n,
            "n_target": prepared.measure_b.n,
        },
        "seed": config.seed,
    }
    return report, prepared


def run_bias(config: AuditConfig) -> tuple[bias_mod.BiasReport, dict, PreparedAudit]:
    prepared = prepare_audit(config)
    metric = metric_from_config(prepared.dataset_a, config.metric)
    part_a = resolve_partition(
        prepared.dataset_a, config.partitions_a, prepared, "source", config.threshold
    )
    part_b = resolve_partition(
        prepared.dataset_b, config.partitions_b, prepared, "target", config.threshold
    )
    report = bias_mod.decompose(
        prepared.coupling,
        prepared.dataset_a.encoded,
        prepared.dataset_b.encoded,
        part_a,
        part_b,
        metric,
        config.convention,
    )
    baseline = product_coupling(prepared.measure_a, prepared.measure_b, prepared.cost)
    product_report = bias_mod.decompose(
        baseline,
        prepared.dataset_a.encoded,
        prepared.dataset_b.encoded,
        part_a,
        part_b,
        metric,
        config.convention,
    )
    doc = report.to_json()
    doc["product_mass_shares"] = product_report.mass_shares.tolist()
    doc["wasserstein"] = prepared.coupling.objective ** (1.0 / config.order)
    return report, doc, prepared


@dataclass(frozen=True)
class RecourseRun:
    dataset: Dataset
    policy: Policy
    bad_indices: np.ndarray
    good_indices: np.ndarray
    coupling: Coupling
    results: list
    summary: recourse_mod.FeatureChangeSummary


def run_recourse(config: AuditConfig) -> RecourseRun:
    """Couple the policy's rejects to its accepts and sweep the alpha grid."""
    dataset = load_csv(config.data_a.csv, config.data_a.schema)
    policy = resolve_policy(config.policy_a, dataset, config.seed)
    scores = policy.scores(dataset.encoded)
    positive = scores > config.threshold
    bad_idx = np.flatnonzero(~positive)
    good_idx = np.flatnonzero(positive)
    if bad_idx.size == 0 or good_idx.size == 0:
        raise InputError(
            "policy assigns every row the same hard label; nothing to couple"
        )
    out_bad = apply_policy(policy, dataset.encoded[bad_idx], ids=bad_idx)
    out_good = apply_policy(policy, dataset.encoded[good_idx], ids=good_idx)
    m_bad = empirical_outcome_measure(out_bad)
    m_good = empirical_outcome_measure(out_good)
    cost = build_cost_matrix(m_bad.points, m_good.points, config.order)
    coupling = solve(m_bad, m_good, cost, config.solver)
    results = recourse_mod.alpha_sweep(
        policy,
        dataset.encoded[bad_idx],
        dataset.encoded[good_idx],
        coupling,
        config.alphas,
        dataset.roles,
        threshold=config.threshold,
    )
    summary = recourse_mod.feature_change_summary(
        results,
        dataset.roles,
        column_names=list(dataset.encoded_column_names),
        column_features=dataset.encoded_features(),
        column_kinds=dataset.encoded_kinds(),
    )
    return RecourseRun(dataset, policy, bad_idx, good_idx, coupling, results, summary)
