#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ripple_model.py - Expected Inactivations under Random Inactivation

Mean-value recursion over the output ripples of an LT decoder:
- RippleState: active-output count m^(j), ripple probabilities p_i^(j),
  cumulative expected inactivations
- initial_state / step / predict_inactivations
- chi: probability that an output of active degree i loses a neighbour
- trajectory helpers and CSV export
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import IO, List, Sequence, Union

import numpy as np

from degree_dist import DegreeDistribution, validate
from lt_codec import received_symbols

logger = logging.getLogger("ltid-ripple")

DEPLETED = 1e-12
DRIFT_TOLERANCE = 1e-9

# "resolution": first-ripple departures use Pr(R_1 > 0) for the peeled row
# "empty-ripple": departures weighted by Pr(R_1 = 0) instead of Pr(R_1 > 0)
FIRST_RIPPLE_RULES = ("resolution", "empty-ripple")


class RippleModelError(ValueError):
    """Raised for inputs outside the recursion's domain."""


@dataclass
class RippleState:
    j: int
    m_j: float
    p: np.ndarray
    cum_inact: float
    n_inact_step: float = 0.0

    def expected_ripples(self) -> np.ndarray:
        """R̂_i^(j) = m^(j)·p_i^(j) for i = 1..d_max."""
        return self.m_j * self.p


def initial_state(k: int, m: int, dist: DegreeDistribution) -> RippleState:
    if m < 1:
        raise RippleModelError(f"need at least one received symbol, got m={m}")
    ok, violations = validate(dist)
    if not ok:
        raise RippleModelError("invalid distribution: " + "; ".join(violations))
    if dist.k != k:
        raise RippleModelError(f"distribution is for k={dist.k}, model runs k={k}")
    return RippleState(j=0, m_j=float(m), p=np.array(dist.probs, dtype=np.float64), cum_inact=0.0)


def chi(i: int, k: int, j: int) -> float:
    """Probability i/(k-j) that an output with i active neighbours loses one."""
    if j >= k:
        raise RippleModelError(f"step j={j} is past the last step of k={k}")
    if i < 1 or i > k - j:
        raise RippleModelError(f"active degree {i} impossible with {k - j} active inputs")
    return i / (k - j)


def _prob_no_success(p: float, trials: float) -> float:
    """(1 - p)^trials for real trials, with 0^0 = 1."""
    if trials <= 0:
        return 1.0
    if p >= 1.0:
        return 0.0
    if p <= 0.0:
        return 1.0
    return math.exp(trials * math.log1p(-p))


def step(state: RippleState, k: int, first_ripple_rule: str = "resolution") -> RippleState:
    """Advance the recursion by one decoding step."""
    if state.j >= k:
        raise RippleModelError(f"cannot step past j={k}")
    if first_ripple_rule not in FIRST_RIPPLE_RULES:
        raise RippleModelError(f"unknown first ripple rule '{first_ripple_rule}'")

    m = state.m_j
    if m < DEPLETED:
        return RippleState(state.j + 1, 0.0, np.zeros_like(state.p), state.cum_inact + 1.0, 1.0)

    p = state.p
    remaining = k - state.j
    p_empty = _prob_no_success(float(p[0]), m)
    n_inact = p_empty

    degrees = np.arange(1, p.size + 1, dtype=np.float64)
    leave = np.minimum(degrees / remaining, 1.0) * m * p
    peel = (1.0 - p_empty) if first_ripple_rule == "resolution" else p_empty
    leave[0] = (1.0 - 1.0 / remaining) * peel + m * p[0] / remaining

    enter = np.zeros_like(leave)
    enter[:-1] = leave[1:]
    mass = m * p + enter - leave
    m_next = m - leave[0]

    if m_next < -DRIFT_TOLERANCE or np.any(mass < -DRIFT_TOLERANCE * max(m, 1.0)):
        logger.warning(
            f"ripple recursion drifted negative at j={state.j} "
            f"(m_next={m_next:.3e}, min mass={mass.min():.3e}); clamping"
        )
    if m_next < DEPLETED:
        p_next = np.zeros_like(p)
        m_next = 0.0
    else:
        p_next = np.clip(mass / m_next, 0.0, 1.0)
    return RippleState(state.j + 1, float(m_next), p_next, state.cum_inact + n_inact, n_inact)


@dataclass
class Prediction:
    k: int
    m: int
    epsilon: float
    n_inact_total: float
    trajectory: List[RippleState] = field(default_factory=list)


def predict_inactivations(k: int,
                          epsilon: float,
                          dist: DegreeDistribution,
                          first_ripple_rule: str = "resolution",
                          keep_trajectory: bool = True) -> Prediction:
    """N_inact: fold step k times from the initial binomial ripples."""
    if epsilon < -1.0 + 1.0 / k - 1e-12:
        raise RippleModelError(f"overhead {epsilon} leaves fewer than one symbol for k={k}")
    m = received_symbols(k, epsilon)
    state = initial_state(k, m, dist)
    trajectory = [state] if keep_trajectory else []
    for _ in range(k):
        state = step(state, k, first_ripple_rule)
        if keep_trajectory:
            trajectory.append(state)
    return Prediction(k=k, m=m, epsilon=epsilon, n_inact_total=state.cum_inact, trajectory=trajectory)


def expected_ripple_sizes(trajectory: Sequence[RippleState], n: int) -> np.ndarray:
    """(len(trajectory), n) array of R̂_i^(j), i = 1..n, zero-padded past d_max."""
    out = np.zeros((len(trajectory), n))
    for row, state in enumerate(trajectory):
        sizes = state.expected_ripples()[:n]
        out[row, : sizes.size] = sizes
    return out


def inactivation_curve(trajectory: Sequence[RippleState]) -> np.ndarray:
    return np.array([s.cum_inact for s in trajectory])


def active_output_curve(trajectory: Sequence[RippleState]) -> np.ndarray:
    return np.array([s.m_j for s in trajectory])


def write_trajectory_csv(trajectory: Sequence[RippleState], out: Union[str, IO[str]]) -> None:
    """Columns: j, m_j, p_1..p_dmax, n_inact_step, cum_inact."""
    d_max = max((s.p.size for s in trajectory), default=0)
    header = ["j", "m_j"] + [f"p_{i}" for i in range(1, d_max + 1)] + ["n_inact_step", "cum_inact"]

    def _write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for s in trajectory:
            probs = list(s.p) + [0.0] * (d_max - s.p.size)
            writer.writerow(
                [s.j, repr(float(s.m_j))]
                + [repr(float(x)) for x in probs]
                + [repr(float(s.n_inact_step)), repr(float(s.cum_inact))]
            )

    if isinstance(out, str):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(out)
