"""Optimal-transport bias audits for classification policies.

Compute couplings between empirical outcome distributions, decompose the
transported mass into individual/subgroup/group bias, compare against
parity-style baselines, and explore actionable recourse along the coupling.
"""

from .bias import (
    BiasReport,
    FeatureMetric,
    decompose,
    group_bias,
    individual_bias,
    normalized_individual_bias,
    support_set,
)
from .errors import DegenerateInputWarning, InputError, SolverError
from .ingest import Dataset, SchemaConfig, cross_partitions, load_csv, partition_by, split
from .ot import (
    CostMatrix,
    Coupling,
    DiscreteMeasure,
    SolverConfig,
    build_cost_matrix,
    product_coupling,
    row_conditional,
    solve,
    solve_entropic,
    solve_exact,
    wasserstein,
)
from .policy import (
    DisparateImpact,
    OutcomeSet,
    ParityReport,
    Policy,
    apply_policy,
    demographic_parity_difference,
    disparate_impact_ratio,
    empirical_outcome_measure,
    equal_opportunity_gap,
    parity_report,
    train_logistic,
)
from .recourse import (
    FeatureChangeSummary,
    FeatureRoles,
    RecourseResult,
    alpha_sweep,
    barycentric_projection,
    feature_change_summary,
    interpolate,
)
from .simulate import SimulationSpec, simulate_admissions, simulation_table

__version__ = "0.1.0"

__all__ = [
    "BiasReport", "CostMatrix", "Coupling", "Dataset", "DegenerateInputWarning",
    "DisparateImpact", "DiscreteMeasure", "FeatureChangeSummary", "FeatureMetric",
    "FeatureRoles", "InputError", "OutcomeSet", "ParityReport", "Policy",
    "RecourseResult", "SchemaConfig", "SimulationSpec", "SolverConfig",
    "SolverError", "alpha_sweep", "apply_policy", "barycentric_projection",
    "build_cost_matrix", "cross_partitions", "decompose",
    "demographic_parity_difference", "disparate_impact_ratio",
    "empirical_outcome_measure", "equal_opportunity_gap",
    "feature_change_summary", "group_bias", "individual_bias", "interpolate",
    "load_csv", "normalized_individual_bias", "parity_report", "partition_by",
    "product_coupling", "row_conditional", "simulate_admissions",
    "simulation_table", "solve", "solve_entropic", "solve_exact", "split",
    "support_set", "train_logistic", "wasserstein",
]
