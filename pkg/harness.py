#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
harness.py - Monte Carlo Experiment Runner

Ties the toolkit together for the command line:
- ExperimentSpec: validated description of one experiment
- run_simulation: seeded encode + decode trials per overhead, optionally
  spread over a process pool with ordered aggregation
- run_prediction / run_bound / run_optimize / emit_dist: wrappers over the
  analytical modules
- trajectory_stats / ripple_rows: simulated vs predicted ripple curves
- CSV writers with fixed float formatting (byte-deterministic output)
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Dict, IO, Iterable, Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from degree_dist import DegreeDistribution, parse_dist_spec, rsd_spike_degree, save_distribution
from failure_bound import DEFAULT_PRECISION, BoundResult, pf_lower_bound
from lt_codec import EncodeSpec, InactivationStrategy, decode, encode, received_symbols
from ripple_model import (
    Prediction,
    active_output_curve,
    expected_ripple_sizes,
    inactivation_curve,
    predict_inactivations,
    write_trajectory_csv,
)
from sa_optimizer import AnnealConfig, AnnealRun, EnergyEvaluator, anneal, write_history_csv

logger = logging.getLogger("ltid-harness")

SIMULATE_HEADER = ["epsilon", "trials", "mean_inact", "std", "stderr", "failure_rate"]
PREDICT_HEADER = ["epsilon", "predicted_inact"]
BOUND_HEADER = ["epsilon", "pf_lower_bound"]

Output = Union[str, IO[str], None]


class ExperimentSpec(BaseModel):
    """One experiment: distribution, k, overhead grid, trial setup, output."""

    mode: Literal["predict", "simulate", "bound", "optimize", "dist", "ripple"]
    dist: str
    k: int = Field(gt=0)
    epsilon_grid: List[float] = Field(default_factory=lambda: [0.0])
    trials: int = Field(default=200, ge=1)
    strategy: InactivationStrategy = InactivationStrategy.RANDOM
    master_seed: int = 0
    output: Optional[str] = None
    workers: int = Field(default=1, ge=1)
    first_ripple_rule: Literal["resolution", "empty-ripple"] = "resolution"
    bound_precision: int = Field(default=DEFAULT_PRECISION, ge=53)
    exponent_mode: Literal["integer", "real"] = "integer"
    trajectory_out: Optional[str] = None
    ripple_depth: int = Field(default=3, ge=1)

    @field_validator("strategy", mode="before")
    @classmethod
    def _parse_strategy(cls, value):
        return InactivationStrategy.parse(value)

    @model_validator(mode="after")
    def _check_grid(self) -> "ExperimentSpec":
        if not self.epsilon_grid:
            raise ValueError("epsilon grid must not be empty")
        floor = -1.0 + 1.0 / self.k
        for eps in self.epsilon_grid:
            if not math.isfinite(eps) or eps < floor - 1e-12:
                raise ValueError(f"overhead {eps} leaves no received symbols for k={self.k}")
        return self

    def build_dist(self) -> DegreeDistribution:
        return parse_dist_spec(self.dist, self.k)


@dataclass
class SimStats:
    epsilon: float
    mean_inactivations: float
    std_dev: float
    stderr: float
    failure_rate: float
    trials: int


@dataclass
class TrialOutcome:
    num_inactivations: int
    success: bool
    ripple_history: Optional[np.ndarray] = None
    active_history: Optional[np.ndarray] = None
    cumulative_inactivations: Optional[np.ndarray] = None


@dataclass
class TrajectoryStats:
    epsilon: float
    trials: int
    mean_ripples: np.ndarray
    mean_active: np.ndarray
    mean_cum_inact: np.ndarray


def parse_eps_grid(text: str) -> List[float]:
    """'0,0.1,0.2' or 'start:step:stop' (stop included when hit)."""
    text = text.strip()
    if not text:
        raise ValueError("empty overhead grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range '{text}' must be start:step:stop")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"range step must be positive, got {step}")
        if stop < start:
            raise ValueError(f"range stop {stop} below start {start}")
        count = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + i * step, 12) for i in range(count + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def derive_trial_seed(master_seed: int, eps_index: int, trial_index: int) -> np.random.SeedSequence:
    """
    Independent stream for one trial.

    The master seed is the SeedSequence entropy and (eps_index, trial_index)
    its spawn key, so every trial's stream depends only on its own indices.
    """
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(eps_index, trial_index))


def _run_trial(job: Tuple[int, int, DegreeDistribution, str, int, int, int, int]) -> TrialOutcome:
    k, m, dist, strategy, master_seed, eps_index, trial_index, depth = job
    rng = np.random.default_rng(derive_trial_seed(master_seed, eps_index, trial_index))
    g = encode(EncodeSpec(k=k, m=m, dist=dist), rng=rng)
    trace = decode(g, strategy, rng=rng, record_ripples=depth)
    outcome = TrialOutcome(trace.num_inactivations, trace.success)
    if depth > 0:
        outcome.ripple_history = trace.ripple_history
        outcome.active_history = trace.active_history
        outcome.cumulative_inactivations = trace.cumulative_inactivations()
    return outcome


@contextmanager
def _trial_mapper(workers: int) -> Iterator[Callable[[Iterable], List[TrialOutcome]]]:
    """Ordered map over trials: inline for one worker, process pool otherwise."""
    if workers <= 1:
        yield lambda jobs: [_run_trial(job) for job in jobs]
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield lambda jobs: list(pool.map(_run_trial, jobs, chunksize=8))


def _jobs(spec: ExperimentSpec, dist: DegreeDistribution, eps_index: int, depth: int = 0):
    m = received_symbols(spec.k, spec.epsilon_grid[eps_index])
    return [
        (spec.k, m, dist, spec.strategy.value, spec.master_seed, eps_index, t, depth)
        for t in range(spec.trials)
    ]


def summarize(epsilon: float, outcomes: Sequence[TrialOutcome]) -> SimStats:
    counts = np.array([o.num_inactivations for o in outcomes], dtype=np.float64)
    trials = counts.size
    std = float(counts.std(ddof=1)) if trials > 1 else 0.0
    failures = sum(1 for o in outcomes if not o.success)
    return SimStats(
        epsilon=epsilon,
        mean_inactivations=float(counts.mean()),
        std_dev=std,
        stderr=std / math.sqrt(trials),
        failure_rate=failures / trials,
        trials=trials,
    )


def run_simulation(spec: ExperimentSpec) -> List[SimStats]:
    """Monte Carlo inactivation counts and failure rates per overhead."""
    dist = spec.build_dist()
    results = []
    logger.info(
        f"Simulating k={spec.k}, {len(spec.epsilon_grid)} overheads x {spec.trials} trials "
        f"({spec.strategy.value}, workers={spec.workers})"
    )
    with _trial_mapper(spec.workers) as run:
        for idx, eps in enumerate(spec.epsilon_grid):
            stats = summarize(eps, run(_jobs(spec, dist, idx)))
            logger.info(
                f"eps={eps}: mean inactivations {stats.mean_inactivations:.3f} "
                f"(stderr {stats.stderr:.3f}), failure rate {stats.failure_rate:.4f}"
            )
            results.append(stats)
    return results


def _trajectory_path(base: str, index: int, count: int) -> str:
    if count == 1:
        return base
    stem, ext = os.path.splitext(base)
    return f"{stem}.{index}{ext or '.csv'}"


def run_prediction(spec: ExperimentSpec) -> List[Tuple[float, Prediction]]:
    """Predicted N_inact per overhead; dumps the k+1-row trajectory if asked."""
    dist = spec.build_dist()
    keep = spec.trajectory_out is not None
    results = []
    for idx, eps in enumerate(spec.epsilon_grid):
        prediction = predict_inactivations(spec.k, eps, dist, spec.first_ripple_rule, keep_trajectory=keep)
        if keep:
            path = _trajectory_path(spec.trajectory_out, idx, len(spec.epsilon_grid))
            write_trajectory_csv(prediction.trajectory, path)
            logger.info(f"Wrote ripple trajectory for eps={eps} to {path}")
        results.append((eps, prediction))
    return results


def run_bound(spec: ExperimentSpec) -> List[Tuple[float, BoundResult]]:
    dist = spec.build_dist()
    results = []
    for eps in spec.epsilon_grid:
        result = pf_lower_bound(dist, spec.k, eps, spec.bound_precision, spec.exponent_mode)
        logger.debug(f"eps={eps}: bound {result.value!r} after {result.terms_used} terms")
        results.append((eps, result))
    return results


def run_optimize(config: AnnealConfig,
                 history_out: Output = None,
                 dist_out: Optional[str] = None,
                 evaluator: Optional[EnergyEvaluator] = None) -> AnnealRun:
    """Anneal, then write the history CSV and the best distribution."""
    run = anneal(config, evaluator)
    if history_out is not None:
        write_history_csv(run, history_out)
    if dist_out is not None:
        save_distribution(run.best_dist, dist_out)
    return run


def describe_distribution(dist_spec: str, k: int) -> Dict[str, Any]:
    dist = parse_dist_spec(dist_spec, k)
    summary: Dict[str, Any] = {
        "k": dist.k,
        "d_max": dist.d_max,
        "mean_degree": dist.mean_degree(),
        "support_size": int(np.count_nonzero(dist.probs)),
        "spike_degree": None,
    }
    kind, _, args = dist_spec.partition(":")
    if kind.strip().lower() in ("rsd", "rsd-trunc"):
        c, delta = (float(v) for v in args.split(",")[:2])
        summary["spike_degree"] = rsd_spike_degree(k, c, delta)
    return summary


def emit_dist(dist_spec: str, k: int, out: Optional[str] = None) -> Dict[str, Any]:
    """Summarize a distribution and write it (text, or JSON for .json paths)."""
    summary = describe_distribution(dist_spec, k)
    if out is not None:
        save_distribution(parse_dist_spec(dist_spec, k), out)
    return summary


def trajectory_stats(spec: ExperimentSpec, eps_index: int = 0, depth: Optional[int] = None) -> TrajectoryStats:
    """Monte Carlo means of R_i^(j), active outputs and cumulative inactivations."""
    depth = depth or spec.ripple_depth
    dist = spec.build_dist()
    with _trial_mapper(spec.workers) as run:
        outcomes = run(_jobs(spec, dist, eps_index, depth))
    return TrajectoryStats(
        epsilon=spec.epsilon_grid[eps_index],
        trials=len(outcomes),
        mean_ripples=np.mean([o.ripple_history for o in outcomes], axis=0),
        mean_active=np.mean([o.active_history for o in outcomes], axis=0),
        mean_cum_inact=np.mean([o.cumulative_inactivations for o in outcomes], axis=0),
    )


def ripple_rows(spec: ExperimentSpec, eps_index: int = 0) -> Tuple[List[str], List[List[Any]]]:
    """Joinable rows of predicted vs simulated ripple curves at one overhead."""
    depth = spec.ripple_depth
    eps = spec.epsilon_grid[eps_index]
    prediction = predict_inactivations(spec.k, eps, spec.build_dist(), spec.first_ripple_rule)
    predicted = expected_ripple_sizes(prediction.trajectory, depth)
    pred_active = active_output_curve(prediction.trajectory)
    pred_cum = inactivation_curve(prediction.trajectory)
    simulated = trajectory_stats(spec, eps_index, depth)

    header = ["j"]
    header += [f"pred_r{i}" for i in range(1, depth + 1)]
    header += [f"sim_r{i}" for i in range(1, depth + 1)]
    header += ["pred_active", "sim_active", "pred_cum_inact", "sim_cum_inact"]
    rows = []
    for j in range(len(prediction.trajectory)):
        rows.append(
            [j]
            + list(predicted[j])
            + list(simulated.mean_ripples[j])
            + [pred_active[j], simulated.mean_active[j], pred_cum[j], simulated.mean_cum_inact[j]]
        )
    return header, rows


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], out: Output = None) -> None:
    """Write rows with repr-formatted floats to a path, a stream, or stdout."""
    def _write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])

    if out is None:
        _write(sys.stdout)
    elif isinstance(out, str):
        directory = os.path.dirname(out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(out)


def write_simulation_csv(stats: Sequence[SimStats], out: Output = None) -> None:
    write_csv(SIMULATE_HEADER, (
        [s.epsilon, s.trials, s.mean_inactivations, s.std_dev, s.stderr, s.failure_rate] for s in stats
    ), out)


def write_prediction_csv(results: Sequence[Tuple[float, Prediction]], out: Output = None) -> None:
    write_csv(PREDICT_HEADER, ([eps, p.n_inact_total] for eps, p in results), out)


def write_bound_csv(results: Sequence[Tuple[float, BoundResult]], out: Output = None) -> None:
    write_csv(BOUND_HEADER, ([eps, r.value] for eps, r in results), out)


def csv_text(writer: Callable[..., None], *args) -> str:
    """Render one of the CSV writers to a string."""
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()
