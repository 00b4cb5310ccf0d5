#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
sa_optimizer.py - Simulated-Annealing Degree Distribution Design

Searches for degree distributions that minimize the predicted number of
inactivations under design constraints:
- DesignConstraints / AnnealConfig: validated pydantic models (JSON config)
- energy: N_inact + penalty on the failure-probability lower bound
- neighbor: pairwise mass transfer projected onto the mean-degree cap
- anneal: Metropolis acceptance with geometric cooling
- rsd_parameter_search: grid search over the truncated robust soliton family
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, IO, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_serializer, field_validator, model_validator

from degree_dist import (
    DegreeDistribution,
    DegreeDistributionError,
    from_array,
    make_rsd,
    parse_dist_spec,
    truncate,
    validate,
)
from failure_bound import DEFAULT_PRECISION, pf_lower_bound
from ripple_model import predict_inactivations

logger = logging.getLogger("ltid-sa")

CAP_TOLERANCE = 1e-9
_MAX_NEIGHBOR_DRAWS = 64


class InfeasibleStateError(ValueError):
    """Raised when annealing starts from a state with infinite energy."""


class DesignConstraints(BaseModel):
    """Design targets: failure-bound target at an overhead, degree caps, penalty weight."""

    k: int = Field(gt=0)
    pf_target: float = Field(default=1e-2, gt=0, lt=1)
    pf_eval_epsilon: float = 0.0
    mean_degree_cap: float = Field(default=12.0, gt=0)
    d_max_cap: int = Field(default=150, gt=0)
    penalty_b: float = Field(default=1000.0, gt=0)
    bound_precision: int = Field(default=DEFAULT_PRECISION, ge=53)

    @model_validator(mode="after")
    def _check_caps(self) -> "DesignConstraints":
        if self.d_max_cap > self.k:
            raise ValueError(f"d_max_cap={self.d_max_cap} exceeds k={self.k}")
        if self.pf_eval_epsilon < -1.0 + 1.0 / self.k:
            raise ValueError(f"pf_eval_epsilon={self.pf_eval_epsilon} leaves no received symbols")
        return self


class AnnealConfig(BaseModel):
    """Annealing schedule plus constraints and starting distribution."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    t_init: float = 10.0
    t_final: float = 1e-3
    cooling_factor: float = Field(default=0.95, gt=0, lt=1)
    moves_per_temperature: int = Field(default=50, gt=0)
    perturbation_scale: float = Field(default=0.2, ge=0)
    seed: int = 0
    max_steps: int = Field(default=100_000, gt=0)
    target_energy: Optional[float] = None
    constraints: DesignConstraints
    initial_dist: DegreeDistribution

    @field_validator("initial_dist", mode="before")
    @classmethod
    def _coerce_dist(cls, value: Any, info: ValidationInfo) -> DegreeDistribution:
        if isinstance(value, DegreeDistribution):
            return value
        if isinstance(value, dict):
            return DegreeDistribution.from_dict(value)
        if isinstance(value, str):
            constraints = info.data.get("constraints")
            if constraints is None:
                raise ValueError("a distribution spec string needs valid constraints")
            return parse_dist_spec(value, constraints.k)
        raise ValueError(f"cannot build a degree distribution from {type(value).__name__}")

    @field_serializer("initial_dist")
    def _dump_dist(self, dist: DegreeDistribution) -> Dict[str, Any]:
        return dist.to_dict()

    @model_validator(mode="after")
    def _check_schedule(self) -> "AnnealConfig":
        if not self.t_init > self.t_final > 0:
            raise ValueError(f"need t_init > t_final > 0 (got {self.t_init}, {self.t_final})")
        if self.initial_dist.k != self.constraints.k:
            raise ValueError(f"initial distribution is for k={self.initial_dist.k}, constraints say k={self.constraints.k}")
        return self

    @classmethod
    def load(cls, path: str) -> "AnnealConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.model_validate(json.load(fh))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.model_dump(), fh, indent=2)
            fh.write("\n")


@dataclass
class EnergyBreakdown:
    n_inact: float
    pf_bound: float
    penalty: float
    total: float
    mean_degree: float
    feasible: bool


def penalty(pf_bound: float, constraints: DesignConstraints) -> float:
    """0 below the target, b·(P_F/P_F* - 1) at or above it."""
    if pf_bound < constraints.pf_target:
        return 0.0
    return constraints.penalty_b * (pf_bound / constraints.pf_target - 1.0)


def _infeasible(dist: DegreeDistribution, constraints: DesignConstraints) -> Optional[str]:
    ok, violations = validate(dist)
    if not ok:
        return "; ".join(violations)
    if dist.k != constraints.k:
        return f"distribution is for k={dist.k}"
    if dist.d_max > constraints.d_max_cap:
        return f"d_max={dist.d_max} above cap {constraints.d_max_cap}"
    if dist.mean_degree() > constraints.mean_degree_cap + CAP_TOLERANCE:
        return f"mean degree {dist.mean_degree():.6f} above cap {constraints.mean_degree_cap}"
    return None


def energy_breakdown(dist: DegreeDistribution,
                     constraints: DesignConstraints,
                     first_ripple_rule: str = "resolution",
                     exponent_mode: str = "integer") -> EnergyBreakdown:
    reason = _infeasible(dist, constraints)
    mean = dist.mean_degree()
    if reason is not None:
        logger.debug(f"infeasible state: {reason}")
        return EnergyBreakdown(math.nan, math.nan, math.inf, math.inf, mean, False)
    eps = constraints.pf_eval_epsilon
    n_inact = predict_inactivations(
        constraints.k, eps, dist, first_ripple_rule, keep_trajectory=False
    ).n_inact_total
    bound = pf_lower_bound(dist, constraints.k, eps, constraints.bound_precision, exponent_mode).value
    pen = penalty(bound, constraints)
    return EnergyBreakdown(n_inact, bound, pen, n_inact + pen, mean, True)


def energy(dist: DegreeDistribution, constraints: DesignConstraints) -> float:
    """E = N_inact + f_p(P_F lower bound); +inf for infeasible states."""
    return energy_breakdown(dist, constraints).total


class EnergyEvaluator:
    """Energy with a cache keyed by distribution content hash."""

    def __init__(self, constraints: DesignConstraints,
                 first_ripple_rule: str = "resolution",
                 exponent_mode: str = "integer"):
        self.constraints = constraints
        self.first_ripple_rule = first_ripple_rule
        self.exponent_mode = exponent_mode
        self._cache: Dict[str, EnergyBreakdown] = {}
        self.evaluations = 0
        self.cache_hits = 0

    def __call__(self, dist: DegreeDistribution) -> EnergyBreakdown:
        self.evaluations += 1
        key = dist.content_hash()
        cached = self._cache.get(key)
        if cached is not None:
            self.cache_hits += 1
            return cached
        result = energy_breakdown(dist, self.constraints, self.first_ripple_rule, self.exponent_mode)
        self._cache[key] = result
        return result


def _project_mean(probs: np.ndarray, cap: float) -> None:
    """Move mass from the largest positive degree to degree 1 until mean ≤ cap."""
    degrees = np.arange(1, probs.size + 1, dtype=np.float64)
    for _ in range(probs.size + 1):
        excess = float(degrees @ probs) - cap
        if excess <= CAP_TOLERANCE * 0.5:
            return
        top = int(np.flatnonzero(probs > 0)[-1])
        if top == 0:
            return
        moved = min(float(probs[top]), excess / top)
        probs[top] -= moved
        probs[0] += moved


def transfer_mass(dist: DegreeDistribution, d_from: int, d_to: int, delta: float,
                  constraints: DesignConstraints) -> DegreeDistribution:
    """Move delta mass from degree d_from to d_to, then enforce the mean cap."""
    cap = constraints.d_max_cap
    if not (1 <= d_from <= cap and 1 <= d_to <= cap) or d_from == d_to:
        raise ValueError(f"degrees must be distinct and within [1, {cap}]")
    probs = np.zeros(cap)
    source = dist.probs[:cap]
    probs[: source.size] = source
    delta = min(delta, probs[d_from - 1])
    probs[d_from - 1] -= delta
    probs[d_to - 1] += delta
    _project_mean(probs, constraints.mean_degree_cap)
    probs /= math.fsum(probs.tolist())
    return from_array(dist.k, probs)


def neighbor(dist: DegreeDistribution,
             perturbation_scale: float,
             constraints: DesignConstraints,
             rng: np.random.Generator) -> DegreeDistribution:
    """A slight variation of dist: random pairwise mass transfer."""
    cap = constraints.d_max_cap
    if perturbation_scale == 0 or cap < 2:
        return dist
    for _ in range(_MAX_NEIGHBOR_DRAWS):
        d_from, d_to = (int(x) + 1 for x in rng.choice(cap, size=2, replace=False))
        delta = perturbation_scale * rng.random() * dist.prob(d_from)
        if delta > 0:
            return transfer_mass(dist, d_from, d_to, delta, constraints)
    return dist


def acceptance_probability(delta_e: float, temperature: float) -> float:
    """Metropolis rule."""
    if delta_e <= 0:
        return 1.0
    if not math.isfinite(delta_e):
        return 0.0
    return math.exp(-delta_e / temperature)


@dataclass
class HistoryEntry:
    step: int
    temperature: float
    energy: float
    accepted: bool
    mean_degree: float
    pf_bound: float


@dataclass
class AnnealRun:
    best_dist: DegreeDistribution
    best_energy: float
    history: List[HistoryEntry] = field(default_factory=list)
    evaluations: int = 0
    cache_hits: int = 0
    best_breakdown: Optional[EnergyBreakdown] = None


def anneal(config: AnnealConfig, evaluator: Optional[EnergyEvaluator] = None) -> AnnealRun:
    """Run one annealing chain; deterministic for a fixed seed."""
    evaluator = evaluator or EnergyEvaluator(config.constraints)
    rng = np.random.default_rng(config.seed)
    current = config.initial_dist
    current_br = evaluator(current)
    if not math.isfinite(current_br.total):
        raise InfeasibleStateError(f"initial distribution is infeasible: {_infeasible(current, config.constraints)}")

    temperature = config.t_init
    best, best_br = current, current_br
    history = [HistoryEntry(0, temperature, current_br.total, True, current_br.mean_degree, current_br.pf_bound)]
    logger.info(f"Annealing from energy {current_br.total:.4f} (N_inact={current_br.n_inact:.4f})")

    step = 0
    done = False
    while temperature > config.t_final and step < config.max_steps and not done:
        for _ in range(config.moves_per_temperature):
            if step >= config.max_steps:
                break
            step += 1
            candidate = neighbor(current, config.perturbation_scale, config.constraints, rng)
            cand_br = evaluator(candidate)
            delta = cand_br.total - current_br.total
            if delta <= 0:
                accepted = True
            elif not math.isfinite(delta):
                accepted = False
            else:
                accepted = rng.random() < acceptance_probability(delta, temperature)
            history.append(HistoryEntry(step, temperature, cand_br.total, accepted,
                                        cand_br.mean_degree, cand_br.pf_bound))
            if accepted:
                current, current_br = candidate, cand_br
                if current_br.total < best_br.total:
                    best, best_br = current, current_br
                    logger.info(f"step {step}: new best energy {best_br.total:.4f} at T={temperature:.4g}")
            if config.target_energy is not None and best_br.total <= config.target_energy:
                done = True
                break
        temperature *= config.cooling_factor

    logger.info(
        f"Annealing finished after {step} steps: best energy {best_br.total:.4f}, "
        f"{evaluator.evaluations} evaluations ({evaluator.cache_hits} cached)"
    )
    return AnnealRun(best, best_br.total, history, evaluator.evaluations, evaluator.cache_hits, best_br)


@dataclass
class RsdSearchResult:
    c: float
    delta: float
    dist: DegreeDistribution
    energy: float
    breakdown: EnergyBreakdown


def rsd_parameter_search(k: int,
                         constraints: DesignConstraints,
                         c_grid: Sequence[float],
                         delta_grid: Sequence[float],
                         evaluator: Optional[EnergyEvaluator] = None) -> RsdSearchResult:
    """Best truncated RSD over the (c, δ) grid; ties go to the smaller mean degree."""
    if not c_grid or not delta_grid:
        raise ValueError("both parameter grids must be non-empty")
    if k != constraints.k:
        raise ValueError(f"k={k} does not match constraints k={constraints.k}")
    evaluator = evaluator or EnergyEvaluator(constraints)
    best: Optional[RsdSearchResult] = None
    for c in c_grid:
        for delta in delta_grid:
            try:
                dist = truncate(make_rsd(k, c, delta), min(constraints.d_max_cap, k))
            except DegreeDistributionError as e:
                logger.debug(f"skipping c={c}, delta={delta}: {e}")
                continue
            br = evaluator(dist)
            key = (br.total, br.mean_degree)
            if best is None or key < (best.energy, best.breakdown.mean_degree):
                best = RsdSearchResult(float(c), float(delta), dist, br.total, br)
    if best is None:
        raise ValueError("no grid point produced a valid robust soliton distribution")
    logger.info(f"RSD grid search: best c={best.c}, delta={best.delta}, energy={best.energy:.4f}")
    return best


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_history_csv(run: AnnealRun, out: Union[str, IO[str]]) -> None:
    """Columns: step, temperature, energy, accepted, mean_degree, pf_bound."""
    def _write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "temperature", "energy", "accepted", "mean_degree", "pf_bound"])
        for h in run.history:
            writer.writerow([h.step, repr(float(h.temperature)), _fmt(h.energy), int(h.accepted),
                             repr(float(h.mean_degree)), _fmt(h.pf_bound)])

    if isinstance(out, str):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(out)
