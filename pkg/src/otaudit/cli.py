"""Command-line front end.

Subcommands: ``distance`` (transport distance between outcome
distributions), ``bias`` (group-by-group decomposition), ``recourse``
(alpha-sweep toward coupled counterparts) and ``simulate`` (two-school
admissions model).  Every run is reproducible: identical config and seed
produce byte-identical JSON/CSV report bodies.

Exit codes: 0 success, 2 input/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import plots, reports
from .audit import AuditConfig, run_bias, run_distance, run_recourse
from .errors import InputError, SolverError
from .simulate import SimulationSpec, simulation_table


def _parse_alphas(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise InputError(f"cannot parse alpha grid {text!r}: {exc}") from exc
    if not values:
        raise InputError("alpha override is empty")
    return values


def _load_config(args) -> AuditConfig:
    config = AuditConfig.from_file(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output_dir"] = Path(args.out)
    if getattr(args, "alpha", None) is not None:
        updates["alphas"] = _parse_alphas(args.alpha)
    if args.no_plots:
        updates["emit_plots"] = False
    if not updates:
        return config
    from dataclasses import replace

    return replace(config, **updates)


def _cmd_distance(args) -> int:
    config = _load_config(args)
    report, prepared = run_distance(config)
    out = Path(config.output_dir)
    paths = [reports.write_json(out / "distance.json", report)]
    if config.emit_coupling:
        paths.append(
            reports.write_coupling_csv(
                out / "coupling.csv",
                prepared.coupling,
                config.solver.support_threshold,
            )
        )
    if config.emit_plots:
        paths.append(
            plots.plot_outcome_distributions(
                prepared.measure_a.points[:, 1],
                prepared.measure_b.points[:, 1],
                report["wasserstein"],
                out / "distance.png",
            )
        )
    _announce(paths)
    return 0


def _cmd_bias(args) -> int:
    config = _load_config(args)
    report, doc, prepared = run_bias(config)
    out = Path(config.output_dir)
    paths = [
        reports.write_json(out / "bias.json", doc),
        reports.write_matrix_csv(
            out / "decomposition.csv",
            report.decomposition,
            report.group_names_a,
            report.group_names_b,
            corner="bias",
        ),
        reports.write_matrix_csv(
            out / "mass_shares.csv",
            report.mass_shares,
            report.group_names_a,
            report.group_names_b,
            corner="mass_share",
        ),
    ]
    if config.emit_coupling:
        paths.append(
            reports.write_coupling_csv(
                out / "coupling.csv",
                prepared.coupling,
                config.solver.support_threshold,
            )
        )
    if config.emit_plots:
        paths.append(
            plots.plot_mass_shares(
                report.mass_shares,
                report.group_names_a,
                report.group_names_b,
                out / "mass_shares.png",
            )
        )
    _announce(paths)
    return 0


def _cmd_recourse(args) -> int:
    config = _load_config(args)
    run = run_recourse(config)
    out = Path(config.output_dir)
    doc = {
        "threshold": config.threshold,
        "n_bad": int(run.bad_indices.size),
        "n_good": int(run.good_indices.size),
        "seed": config.seed,
        "sweep": [
            {
                "alpha": r.alpha,
                "reclassified_fraction": r.reclassified_fraction,
                "mean_probability": float(np.mean(r.good_label_probability)),
            }
            for r in run.results
        ],
        "feature_changes": run.summary.to_json(),
    }
    paths = [
        reports.write_json(out / "recourse.json", doc),
        reports.write_recourse_long_csv(
            out / "recourse_long.csv", run.results, run.bad_indices
        ),
        reports.write_rows_csv(
            out / "feature_changes.csv",
            ["alpha", "feature", "column", "mean_delta", "encoding"],
            [
                [repr(float(r["alpha"])), r["feature"], r["column"],
                 repr(float(r["mean_delta"])), r["encoding"]]
                for r in run.summary.rows
            ],
        ),
    ]
    if config.emit_plots:
        paths.append(
            plots.plot_recourse_probabilities(run.results, out / "recourse.png")
        )
        if not run.summary.empty:
            paths.append(
                plots.plot_feature_changes(
                    [dict(r) for r in run.summary.rows],
                    out / "feature_changes.png",
                )
            )
    _announce(paths)
    return 0


def _cmd_simulate(args) -> int:
    doc = {}
    base = Path(".")
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise InputError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"config is not valid JSON: {exc}") from exc
        base = path.parent
    rule = args.rule if args.rule is not None else float(doc.get("rule", 0.25))
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    spec = SimulationSpec(
        rule=rule,
        cohort_a=int(doc.get("cohort_a", 400)),
        cohort_b=int(doc.get("cohort_b", 400)),
        years=int(doc.get("years", 50)),
        seed=seed,
    )
    out = Path(args.out) if args.out is not None else base / doc.get(
        "output_dir", "reports"
    )
    emit_plots = not args.no_plots and bool(doc.get("emit_plots", True))
    table = simulation_table(spec)
    paths = [
        reports.write_json(out / "simulate.json", table),
        reports.write_rows_csv(
            out / "simulate.csv",
            ["year", "wasserstein", "di_ratio", "di_degenerate",
             "admit_rate_a", "admit_rate_b"],
            [
                [row["year"], repr(row["wasserstein"]), repr(row["di_ratio"]),
                 int(row["di_degenerate"]), repr(row["admit_rate_a"]),
                 repr(row["admit_rate_b"])]
                for row in table["years"]
            ],
        ),
    ]
    if emit_plots:
        paths.append(plots.plot_simulation(table["years"], out / "simulate.png"))
    _announce(paths)
    return 0


def _announce(paths) -> None:
    for p in paths:
        print(f"wrote {p}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otaudit",
        description="Audit classification policies with optimal transport.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument(
            "--config", required=config_required, help="path to a JSON audit config"
        )
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument(
            "--no-plots", action="store_true", help="skip figure rendering"
        )

    p = sub.add_parser("distance", help="Wasserstein distance between outcomes")
    common(p)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("bias", help="coupling-based bias decomposition")
    common(p)
    p.set_defaults(func=_cmd_bias)

    p = sub.add_parser("recourse", help="coupling-guided recourse sweep")
    common(p)
    p.add_argument(
        "--alpha", default=None,
        help="override alpha grid, comma-separated (e.g. 0,0.5,1)",
    )
    p.set_defaults(func=_cmd_recourse)

    p = sub.add_parser("simulate", help="two-school admissions simulation")
    common(p, config_required=False)
    p.add_argument(
        "--rule", type=float, default=None, help="acceptance rule r in [0, 1]"
    )
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
