#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
lt_codec.py - LT Encoding and Inactivation Decoding

Implements the binary LT code and its maximum-likelihood decoder:
- encode: sample the m x k generator matrix G from a degree distribution
- encode_symbols: compute received values c = u·Gᵀ for payload round-trips
- DecoderState / resolve_step: one triangularization step (peel or inactivate)
- select_inactivation: random or maximum-active-degree inactivation
- decode: triangularization, zero-matrix procedure, GE on the reference
  variables and back-substitution, returning a DecoderTrace
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import List, Optional, Tuple, Union

import numpy as np

from degree_dist import DegreeDistribution, sample_degrees
from gf2 import DenseBitMatrix, DimensionMismatchError, SparseBitMatrix, rank, solve_dense, xor_row

logger = logging.getLogger("ltid-codec")


class DecodingError(RuntimeError):
    """Raised when a decoding operation cannot proceed."""


class ContractViolation(RuntimeError):
    """Raised when a decoder primitive is called outside its precondition."""


class InactivationStrategy(str, Enum):
    RANDOM = "random"
    MAX_ACTIVE_DEGREE = "max-active-degree"

    @classmethod
    def parse(cls, value: Union[str, "InactivationStrategy"]) -> "InactivationStrategy":
        if isinstance(value, cls):
            return value
        normalized = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(f"Unknown inactivation strategy '{value}'")


class InputMark(IntEnum):
    ACTIVE = 0
    RESOLVABLE = 1
    INACTIVE = 2


def received_symbols(k: int, epsilon: float) -> int:
    """m = ⌈k(1+ε)⌉, guarding against float noise just above an integer."""
    m = math.ceil(k * (1.0 + epsilon) - 1e-9)
    if m < 1:
        raise ValueError(f"overhead {epsilon} leaves no received symbols for k={k}")
    return m


@dataclass
class EncodeSpec:
    """k input symbols, m received output symbols drawn from dist with seed."""
    k: int
    m: int
    dist: DegreeDistribution
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ValueError(f"k and m must be positive (k={self.k}, m={self.m})")
        if self.dist.d_max > self.k:
            raise ValueError(f"d_max={self.dist.d_max} exceeds k={self.k}")

    @property
    def overhead(self) -> float:
        return self.m / self.k - 1.0

    @classmethod
    def from_overhead(cls, k: int, epsilon: float, dist: DegreeDistribution, seed: int = 0) -> "EncodeSpec":
        return cls(k=k, m=received_symbols(k, epsilon), dist=dist, seed=seed)


def encode(spec: EncodeSpec, rng: Optional[np.random.Generator] = None) -> SparseBitMatrix:
    """Sample G: each row draws a degree d and d distinct input indices."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    degrees = sample_degrees(spec.dist, rng, spec.m)
    supports = [rng.choice(spec.k, size=int(d), replace=False).tolist() for d in degrees]
    return SparseBitMatrix(spec.m, spec.k, supports)


def encode_symbols(g: SparseBitMatrix, u) -> np.ndarray:
    """c = u·Gᵀ; u holds one integer symbol (scalar or packet row) per input."""
    values = np.asarray(u)
    if values.shape[0] != g.cols:
        raise DimensionMismatchError(f"{values.shape[0]} input symbols for {g.cols} columns")
    out = np.zeros((g.rows,) + values.shape[1:], dtype=values.dtype)
    for r, support in enumerate(g.row_supports):
        if support:
            out[r] = np.bitwise_xor.reduce(values[sorted(support)], axis=0)
    return out


@dataclass
class StepEvent:
    kind: str  # "resolved" or "inactivated"
    input: int
    row: Optional[int] = None


class DecoderState:
    """
    Triangularization state over a private copy of G.

    Tracks the mark of every input, the active degree of every output, the
    first ripple (outputs with exactly one active neighbour), and the
    resolution / inactivation order needed by the later decoding phases.
    """

    def __init__(self,
                 matrix: SparseBitMatrix,
                 strategy: Union[str, InactivationStrategy] = InactivationStrategy.RANDOM,
                 rng: Optional[np.random.Generator] = None,
                 record_ripples: int = 0):
        self.matrix = matrix
        self.k = matrix.cols
        self.m = matrix.rows
        self.strategy = InactivationStrategy.parse(strategy)
        self.rng = rng if rng is not None else np.random.default_rng()

        # column -> rows reverse index, only the decoder needs it
        self.columns: List[List[int]] = [[] for _ in range(self.k)]
        for r, support in enumerate(matrix.row_supports):
            for c in support:
                self.columns[c].append(r)

        self.input_marks = np.full(self.k, InputMark.ACTIVE, dtype=np.int8)
        self.output_active_degree: List[int] = [len(s) for s in matrix.row_supports]
        # an active input only meets outputs that still have an active neighbour,
        # so its active degree is its column degree
        self.column_degree = np.array([len(rows) for rows in self.columns], dtype=np.int64)
        self.ripple1 = {o for o, d in enumerate(self.output_active_degree) if d == 1}
        self._ripple_heap = sorted(self.ripple1)
        self.step = 0
        self.l_r = 0
        self.l_x = 0

        self.resolved_order: List[Tuple[int, int]] = []
        self.inactive_order: List[int] = []
        self.per_step_inactivation: List[int] = []
        self.values: Optional[np.ndarray] = None
        self.success: Optional[bool] = None

        self.record_ripples = int(record_ripples)
        self._histogram: Optional[np.ndarray] = None
        self.ripple_history: List[np.ndarray] = []
        self.active_history: List[int] = []
        if self.record_ripples > 0:
            top = max(self.output_active_degree, default=0)
            self._histogram = np.bincount(
                np.asarray(self.output_active_degree, dtype=np.int64),
                minlength=max(top, self.record_ripples) + 1,
            )
            self._snapshot()

    @property
    def l_a(self) -> int:
        return self.k - self.l_r - self.l_x

    def active_inputs(self) -> np.ndarray:
        return np.flatnonzero(self.input_marks == InputMark.ACTIVE)

    def _snapshot(self) -> None:
        hist = self._histogram
        self.ripple_history.append(hist[1:self.record_ripples + 1].copy())
        self.active_history.append(int(self.m - hist[0]))

    def _pop_ripple(self) -> Optional[int]:
        heap = self._ripple_heap
        while heap:
            o = heap[0]
            if o in self.ripple1:
                return o
            heapq.heappop(heap)
        return None

    def _mark(self, u: int, mark: InputMark) -> None:
        self.input_marks[u] = mark
        degrees = self.output_active_degree
        hist = self._histogram
        for o in self.columns[u]:
            old = degrees[o]
            new = old - 1
            degrees[o] = new
            if hist is not None:
                hist[old] -= 1
                hist[new] += 1
            if new == 1:
                self.ripple1.add(o)
                heapq.heappush(self._ripple_heap, o)
            elif new == 0:
                self.ripple1.discard(o)

    def recount_violations(self) -> List[str]:
        """Recompute every tracked counter from scratch and report mismatches."""
        problems = []
        active = self.input_marks == InputMark.ACTIVE
        for o, support in enumerate(self.matrix.row_supports):
            count = sum(1 for c in support if active[c])
            if count != self.output_active_degree[o]:
                problems.append(f"output {o}: tracked {self.output_active_degree[o]}, actual {count}")
        expected_ripple = {o for o, d in enumerate(self.output_active_degree) if d == 1}
        if expected_ripple != self.ripple1:
            problems.append("first ripple out of sync")
        if self.l_r + self.l_x + int(active.sum()) != self.k:
            problems.append("l_r + l_x + l_a != k")
        return problems


def select_inactivation(state: DecoderState,
                        strategy: Union[str, InactivationStrategy],
                        rng: np.random.Generator) -> int:
    """Choose the active input to inactivate when the first ripple is empty."""
    if state.ripple1:
        raise ContractViolation("inactivation requested while the first ripple is non-empty")
    active = state.active_inputs()
    if active.size == 0:
        raise ContractViolation("no active input left to inactivate")
    strategy = InactivationStrategy.parse(strategy)
    if strategy is InactivationStrategy.RANDOM or active.size == 1:
        return int(active[rng.integers(active.size)])
    degrees = state.column_degree[active]
    candidates = active[degrees == degrees.max()]
    return int(candidates[rng.integers(candidates.size)])


def resolve_step(state: DecoderState) -> StepEvent:
    """Apply one triangularization step: peel the lowest ripple row or inactivate."""
    if state.l_a < 1:
        raise ContractViolation("no active input left")
    row = state._pop_ripple()
    if row is not None:
        marks = state.input_marks
        u = next(c for c in state.matrix.row_supports[row] if marks[c] == InputMark.ACTIVE)
        state._mark(u, InputMark.RESOLVABLE)
        state.resolved_order.append((u, row))
        state.l_r += 1
        state.per_step_inactivation.append(0)
        event = StepEvent("resolved", u, row)
    else:
        u = select_inactivation(state, state.strategy, state.rng)
        state._mark(u, InputMark.INACTIVE)
        state.inactive_order.append(u)
        state.l_x += 1
        state.per_step_inactivation.append(1)
        event = StepEvent("inactivated", u)
        logger.debug(f"step {state.step}: inactivated input {u} (l_x={state.l_x})")
    state.step += 1
    if state._histogram is not None:
        state._snapshot()
    return event


def zero_matrix_procedure(state: DecoderState) -> Tuple[List[int], DenseBitMatrix]:
    """
    Diagonalize A and zero out B with row sums on the sparse matrix.

    Afterwards every pivot row holds its own input plus inactive columns and
    every other row holds inactive columns only. Returns those other rows
    (original indices) and their dense image C over the reference variables.
    """
    matrix = state.matrix
    supports = matrix.row_supports
    marks = state.input_marks
    values = state.values
    pivot_of = {u: o for u, o in state.resolved_order}

    def eliminate(row: int, keep: Optional[int]) -> None:
        resolved = [c for c in supports[row] if c != keep and marks[c] == InputMark.RESOLVABLE]
        for c in resolved:
            src = pivot_of[c]
            xor_row(matrix, src, row)
            if values is not None:
                values[row] ^= values[src]

    for u, o in state.resolved_order:
        eliminate(o, u)

    pivot_rows = set(pivot_of.values())
    remaining = [o for o in range(state.m) if o not in pivot_rows]
    for o in remaining:
        eliminate(o, None)

    position = {x: i for i, x in enumerate(state.inactive_order)}
    dense = np.zeros((len(remaining), state.l_x), dtype=np.uint8)
    for i, o in enumerate(remaining):
        for c in supports[o]:
            dense[i, position[c]] = 1
    return remaining, DenseBitMatrix.from_array(dense)


def back_substitute(state: DecoderState, reference_values) -> np.ndarray:
    """Recover all inputs from the reference variable values."""
    if not state.success:
        raise DecodingError("back-substitution needs a successful decode")
    if state.values is None:
        raise DecodingError("no received values to back-substitute")
    refs = np.asarray(reference_values)
    if refs.shape[0] != state.l_x:
        raise DimensionMismatchError(f"{refs.shape[0]} reference values for {state.l_x} inactive inputs")
    values = state.values
    recovered = np.zeros((state.k,) + values.shape[1:], dtype=values.dtype)
    for i, x in enumerate(state.inactive_order):
        recovered[x] = refs[i]
    supports = state.matrix.row_supports
    for u, o in reversed(state.resolved_order):
        value = values[o].copy()
        for c in supports[o]:
            if c != u:
                value ^= recovered[c]
        recovered[u] = value
    return recovered


@dataclass
class DecoderTrace:
    """Per-run record of inactivation decoding."""
    num_inactivations: int
    success: bool
    per_step_inactivation: np.ndarray
    ge_rank: int
    strategy: str
    num_resolved: int = 0
    recovered: Optional[np.ndarray] = None
    inactivated_inputs: List[int] = field(default_factory=list)
    ripple_history: Optional[np.ndarray] = None
    active_history: Optional[np.ndarray] = None

    def cumulative_inactivations(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.per_step_inactivation)])


def decode(g: SparseBitMatrix,
           strategy: Union[str, InactivationStrategy] = InactivationStrategy.RANDOM,
           rhs=None,
           rng: Optional[np.random.Generator] = None,
           record_ripples: int = 0) -> DecoderTrace:
    """
    Inactivation (ML) decoding of c = u·Gᵀ.

    G is copied; the copy is triangularized over k steps, run through the
    zero-matrix procedure, and the reference variables are solved by GE.
    Decoding succeeds iff rank(C) equals the number of inactivations. When
    rhs (one received value per row) is given, the inputs are recovered.
    """
    values = None
    if rhs is not None:
        values = np.array(rhs, copy=True)
        if values.ndim == 0 or values.shape[0] != g.rows:
            raise DimensionMismatchError(
                f"{0 if values.ndim == 0 else values.shape[0]} received values for {g.rows} rows"
            )
        if not np.issubdtype(values.dtype, np.integer):
            raise DimensionMismatchError(f"received values must be integers, got {values.dtype}")

    state = DecoderState(g.copy(), strategy, rng, record_ripples)
    state.values = values
    while state.step < state.k:
        resolve_step(state)

    remaining, c_matrix = zero_matrix_procedure(state)
    reference = None
    if values is not None and state.l_x > 0:
        result = solve_dense(c_matrix, values[np.asarray(remaining, dtype=np.int64)])
        ge_rank = result.rank
        if result.status == "inconsistent" and ge_rank == state.l_x:
            logger.warning("received values are inconsistent with G; payload not recovered")
        reference = result.solution
    else:
        ge_rank = rank(c_matrix)
        if values is not None:
            reference = np.zeros((0,) + values.shape[1:], dtype=values.dtype)

    state.success = ge_rank == state.l_x
    recovered = None
    if state.success and reference is not None:
        recovered = back_substitute(state, reference)

    pivot_rows = [o for _, o in state.resolved_order]
    state.matrix.set_permutations(
        pivot_rows + remaining,
        [u for u, _ in state.resolved_order] + state.inactive_order,
    )

    trace = DecoderTrace(
        num_inactivations=state.l_x,
        success=state.success,
        per_step_inactivation=np.asarray(state.per_step_inactivation, dtype=np.int8),
        ge_rank=ge_rank,
        strategy=state.strategy.value,
        num_resolved=state.l_r,
        recovered=recovered,
        inactivated_inputs=list(state.inactive_order),
    )
    if state.record_ripples > 0:
        trace.ripple_history = np.vstack(state.ripple_history)
        trace.active_history = np.asarray(state.active_history, dtype=np.int64)
    return trace
