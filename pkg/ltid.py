#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ltid.py - LT Inactivation Decoding Toolkit (command line)

Subcommands:
  dist      describe / export a degree distribution
  predict   predicted inactivations per overhead (CSV)
  simulate  Monte Carlo inactivations and failure rate per overhead (CSV)
  bound     failure-probability lower bound per overhead (CSV)
  optimize  simulated-annealing distribution design
  ripple    predicted vs simulated ripple curves at one overhead (CSV)
  runs      list archived runs

Every plot is a two-command recipe, e.g.
  ltid.py predict  --k 1000 --eps 0:0.05:0.3 --dist rsd:0.09266,0.001993 --out pred.csv
  ltid.py simulate --k 1000 --eps 0:0.05:0.3 --dist rsd:0.09266,0.001993 --out sim.csv
"""

import argparse
import logging
import sys
from dataclasses import asdict
from typing import List, Optional

from sqlalchemy.exc import SQLAlchemyError

from config import ToolkitSettings, load_settings
from failure_bound import BoundPrecisionError
from harness import (
    ExperimentSpec,
    describe_distribution,
    emit_dist,
    parse_eps_grid,
    ripple_rows,
    run_bound,
    run_optimize,
    run_prediction,
    run_simulation,
    write_bound_csv,
    write_csv,
    write_prediction_csv,
    write_simulation_csv,
)
from lt_codec import ContractViolation, DecodingError
from sa_optimizer import (
    AnnealConfig,
    DesignConstraints,
    EnergyEvaluator,
    rsd_parameter_search,
)

logger = logging.getLogger("ltid-cli")

EXIT_OK = 0
EXIT_ERROR = 2


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, required=True, help="Number of input symbols")
    parser.add_argument("--dist", required=True,
                        help="rsd:c,delta | rsd-trunc:c,delta,dmax | lrfc:mean | file:PATH")
    parser.add_argument("--eps", default="0", help="Overheads: comma list or start:step:stop (default 0)")
    parser.add_argument("--out", default=None, help="Output CSV path (default: stdout)")
    parser.add_argument("--trials", type=int, default=None, help="Trials per overhead (Monte Carlo modes)")
    parser.add_argument("--strategy", default=None, choices=["random", "max-active-degree"],
                        help="Inactivation strategy")
    parser.add_argument("--seed", type=int, default=None, help="Master seed")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="ltid", description="LT inactivation decoding design toolkit")
    root.add_argument("--settings", default=None, help="Settings JSON (default: config.json)")
    root.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR")
    root.add_argument("--archive", default=None, help="Archive runs to this database URL")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="Describe or export a degree distribution")
    p.add_argument("--k", type=int, required=True, help="Number of input symbols")
    p.add_argument("--dist", required=True, help="Distribution spec")
    p.add_argument("--out", default=None, help="Write the distribution (.json or text)")

    p = sub.add_parser("predict", help="Predicted number of inactivations")
    _common(p)
    p.add_argument("--trajectory-out", default=None, help="Write the ripple trajectory CSV (k+1 rows)")
    p.add_argument("--first-ripple-rule", default=None, choices=["resolution", "empty-ripple"])

    p = sub.add_parser("simulate", help="Monte Carlo inactivation decoding")
    _common(p)

    p = sub.add_parser("bound", help="Lower bound on the failure probability")
    _common(p)
    p.add_argument("--precision", type=int, default=None, help="Working precision in bits (default 256)")
    p.add_argument("--exponent-mode", default=None, choices=["integer", "real"])

    p = sub.add_parser("ripple", help="Predicted vs simulated ripple curves at the first overhead")
    _common(p)
    p.add_argument("--depth", type=int, default=None, help="Ripples R_1..R_depth to report (default 3)")

    p = sub.add_parser("optimize", help="Simulated-annealing distribution design")
    p.add_argument("--config", default=None, help="AnnealConfig JSON file")
    p.add_argument("--k", type=int, default=None, help="Number of input symbols (without --config)")
    p.add_argument("--dist", default=None, help="Initial distribution (without --config)")
    p.add_argument("--pf-target", type=float, default=1e-2)
    p.add_argument("--pf-eps", type=float, default=0.0, help="Overhead where the bound is evaluated")
    p.add_argument("--mean-cap", type=float, default=12.0)
    p.add_argument("--dmax-cap", type=int, default=150)
    p.add_argument("--penalty-b", type=float, default=1000.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--out", default=None, help="Annealing history CSV")
    p.add_argument("--dist-out", default=None, help="Write the best distribution here")
    p.add_argument("--rsd-c-grid", default=None, help="Also report the best truncated RSD over these c values")
    p.add_argument("--rsd-delta-grid", default=None, help="... and these delta values")

    p = sub.add_parser("runs", help="List archived runs")
    p.add_argument("--mode", default=None)
    p.add_argument("--limit", type=int, default=20)
    return root


def _spec(args, settings: ToolkitSettings, mode: str) -> ExperimentSpec:
    def pick(name, fallback):
        value = getattr(args, name, None)
        return fallback if value is None else value

    return ExperimentSpec(
        mode=mode,
        dist=args.dist,
        k=args.k,
        epsilon_grid=parse_eps_grid(args.eps),
        trials=pick("trials", settings.trials),
        strategy=pick("strategy", settings.strategy),
        master_seed=pick("seed", settings.master_seed),
        output=args.out,
        workers=pick("workers", settings.workers),
        first_ripple_rule=pick("first_ripple_rule", settings.first_ripple_rule),
        bound_precision=pick("precision", settings.bound_precision),
        exponent_mode=pick("exponent_mode", settings.bound_exponent_mode),
        trajectory_out=getattr(args, "trajectory_out", None),
        ripple_depth=pick("depth", settings.ripple_depth),
    )


def _archive(settings: ToolkitSettings):
    if not settings.archive_url:
        return None
    from run_archive import RunArchive
    return RunArchive(settings.archive_url)


def cmd_dist(args, settings: ToolkitSettings) -> int:
    summary = emit_dist(args.dist, args.k, args.out) if args.out else describe_distribution(args.dist, args.k)
    print(f"k            : {summary['k']}")
    print(f"d_max        : {summary['d_max']}")
    print(f"mean degree  : {summary['mean_degree']:.6f}")
    print(f"support size : {summary['support_size']}")
    if summary["spike_degree"] is not None:
        print(f"spike degree : {summary['spike_degree']}")
    if args.out:
        print(f"written to   : {args.out}")
    return EXIT_OK


def cmd_predict(args, settings: ToolkitSettings) -> int:
    spec = _spec(args, settings, "predict")
    results = run_prediction(spec)
    write_prediction_csv(results, spec.output)
    archive = _archive(settings)
    if archive:
        archive.record_experiment(spec, [{"epsilon": e, "predicted_inact": p.n_inact_total} for e, p in results])
    return EXIT_OK


def cmd_simulate(args, settings: ToolkitSettings) -> int:
    spec = _spec(args, settings, "simulate")
    stats = run_simulation(spec)
    write_simulation_csv(stats, spec.output)
    archive = _archive(settings)
    if archive:
        archive.record_experiment(spec, [asdict(s) for s in stats])
    return EXIT_OK


def cmd_bound(args, settings: ToolkitSettings) -> int:
    spec = _spec(args, settings, "bound")
    results = run_bound(spec)
    write_bound_csv(results, spec.output)
    archive = _archive(settings)
    if archive:
        archive.record_experiment(spec, [{"epsilon": e, "pf_lower_bound": r.value} for e, r in results])
    return EXIT_OK


def cmd_ripple(args, settings: ToolkitSettings) -> int:
    spec = _spec(args, settings, "ripple")
    header, rows = ripple_rows(spec, 0)
    write_csv(header, rows, spec.output)
    archive = _archive(settings)
    if archive:
        last = dict(zip(header, rows[-1]))
        archive.record_experiment(spec, [{k: float(v) for k, v in last.items()}])
    return EXIT_OK


def _anneal_config(args, settings: ToolkitSettings) -> AnnealConfig:
    if args.config:
        config = AnnealConfig.load(args.config)
        updates = {}
        if args.seed is not None:
            updates["seed"] = args.seed
        if args.max_steps is not None:
            updates["max_steps"] = args.max_steps
        return config.model_copy(update=updates) if updates else config
    if args.k is None or args.dist is None:
        raise ValueError("optimize needs --config, or both --k and --dist")
    constraints = DesignConstraints(
        k=args.k,
        pf_target=args.pf_target,
        pf_eval_epsilon=args.pf_eps,
        mean_degree_cap=args.mean_cap,
        d_max_cap=min(args.dmax_cap, args.k),
        penalty_b=args.penalty_b,
        bound_precision=settings.bound_precision,
    )
    schedule = settings.anneal.model_dump()
    if args.max_steps is not None:
        schedule["max_steps"] = args.max_steps
    return AnnealConfig(
        **schedule,
        seed=settings.master_seed if args.seed is None else args.seed,
        constraints=constraints,
        initial_dist=args.dist,
    )


def cmd_optimize(args, settings: ToolkitSettings) -> int:
    config = _anneal_config(args, settings)
    evaluator = EnergyEvaluator(config.constraints, settings.first_ripple_rule, settings.bound_exponent_mode)
    run = run_optimize(config, args.out, args.dist_out, evaluator)
    best = run.best_breakdown
    print(f"best energy      : {run.best_energy:.6f}")
    print(f"  inactivations  : {best.n_inact:.6f}")
    print(f"  P_F lower bound: {best.pf_bound:.6e}")
    print(f"  mean degree    : {best.mean_degree:.6f}")
    print(f"  d_max          : {run.best_dist.d_max}")
    print(f"evaluations      : {run.evaluations} ({run.cache_hits} cached)")
    if args.rsd_c_grid and args.rsd_delta_grid:
        baseline = rsd_parameter_search(
            config.constraints.k, config.constraints,
            [float(v) for v in args.rsd_c_grid.split(",")],
            [float(v) for v in args.rsd_delta_grid.split(",")],
            evaluator,
        )
        print(f"best truncated RSD: c={baseline.c}, delta={baseline.delta}, "
              f"energy {baseline.energy:.6f} (inactivations {baseline.breakdown.n_inact:.6f})")
    archive = _archive(settings)
    if archive:
        run_id = archive.record_anneal(config, run, args.out)
        print(f"archived as      : {run_id}")
    return EXIT_OK


def cmd_runs(args, settings: ToolkitSettings) -> int:
    archive = _archive(settings)
    if archive is None:
        raise ValueError("no archive configured (use --archive URL or LTID_ARCHIVE_URL)")
    for run in archive.list_runs(args.mode, args.limit):
        print(f"{run['id']}  {run['mode']:<9} k={run['k']:<7} {run['created_at']}")
    return EXIT_OK


COMMANDS = {
    "dist": cmd_dist,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "ripple": cmd_ripple,
    "optimize": cmd_optimize,
    "runs": cmd_runs,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args.settings)
        updates = {}
        if args.log_level:
            updates["log_level"] = args.log_level.upper()
        if args.archive:
            updates["archive_url"] = args.archive
        if updates:
            settings = ToolkitSettings.model_validate({**settings.model_dump(), **updates})
    except (ValueError, OSError) as e:
        print(f"ltid: error: {e}", file=sys.stderr)
        return EXIT_ERROR

    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format="[%(asctime)s] %(levelname)s - %(name)s - %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args, settings)
    except (ValueError, OSError, DecodingError, ContractViolation, BoundPrecisionError, SQLAlchemyError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"ltid: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
