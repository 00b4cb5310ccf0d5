#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
gf2.py - Binary (GF(2)) Matrix Primitives

Sparse and dense bit matrices plus the elimination routines shared by the
inactivation decoder and the test oracles:
- SparseBitMatrix: per-row column supports with row/column permutation maps
- DenseBitMatrix: row-major packed 64-bit word storage
- rank / sparse_rank: GF(2) rank by full elimination
- solve_dense: Gauss-Jordan solve with rank-deficiency and inconsistency reports
- xor_row: row sum on the sparse representation
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger("ltid-gf2")

WORD_BITS = 64
_ONE = np.uint64(1)


class DimensionMismatchError(ValueError):
    """Raised when matrix and vector shapes disagree."""


def _words_for(cols: int) -> int:
    return max(1, (cols + WORD_BITS - 1) // WORD_BITS)


class DenseBitMatrix:
    """Dense GF(2) matrix packed into little-endian 64-bit words per row."""

    def __init__(self, rows: int, cols: int, bits: Optional[np.ndarray] = None):
        if rows < 0 or cols < 0:
            raise ValueError(f"Invalid shape {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        words = _words_for(cols)
        if bits is None:
            bits = np.zeros((rows, words), dtype=np.uint64)
        elif bits.shape != (rows, words) or bits.dtype != np.uint64:
            raise DimensionMismatchError(
                f"bit storage {bits.shape}/{bits.dtype} does not fit {rows}x{cols}"
            )
        self.bits = bits

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DenseBitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "DenseBitMatrix":
        mat = cls(n, n)
        for i in range(n):
            mat.set(i, i, 1)
        return mat

    @classmethod
    def from_array(cls, array) -> "DenseBitMatrix":
        """Build from a 2-D array-like of 0/1 entries."""
        arr = np.asarray(array, dtype=np.uint8)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"expected a 2-D array, got {arr.ndim}-D")
        rows, cols = arr.shape
        words = _words_for(cols)
        padded = np.zeros((rows, words * WORD_BITS), dtype=np.uint8)
        padded[:, :cols] = arr & 1
        packed = np.packbits(padded, axis=1, bitorder="little")
        bits = np.ascontiguousarray(packed).view("<u8").astype(np.uint64)
        return cls(rows, cols, bits.reshape(rows, words))

    def to_array(self) -> np.ndarray:
        """Unpack into a (rows, cols) uint8 array."""
        if self.rows == 0:
            return np.zeros((0, self.cols), dtype=np.uint8)
        raw = np.ascontiguousarray(self.bits.astype("<u8")).view(np.uint8)
        unpacked = np.unpackbits(raw.reshape(self.rows, -1), axis=1, bitorder="little")
        return unpacked[:, : self.cols].copy()

    def copy(self) -> "DenseBitMatrix":
        return DenseBitMatrix(self.rows, self.cols, self.bits.copy())

    def _check(self, row: int, col: int) -> None:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"({row}, {col}) outside {self.rows}x{self.cols}")

    def get(self, row: int, col: int) -> int:
        self._check(row, col)
        word, bit = divmod(col, WORD_BITS)
        return int((self.bits[row, word] >> np.uint64(bit)) & _ONE)

    def set(self, row: int, col: int, value: int) -> None:
        self._check(row, col)
        word, bit = divmod(col, WORD_BITS)
        mask = _ONE << np.uint64(bit)
        if value & 1:
            self.bits[row, word] |= mask
        else:
            self.bits[row, word] &= ~mask

    def row_xor(self, dst: int, src: int) -> None:
        self.bits[dst] ^= self.bits[src]

    def multiply(self, x) -> np.ndarray:
        """Return A·x where x holds one symbol (scalar or packet row) per column."""
        values = np.asarray(x)
        if values.shape[0] != self.cols:
            raise DimensionMismatchError(
                f"vector of length {values.shape[0]} against {self.cols} columns"
            )
        dense = self.to_array()
        out = np.zeros((self.rows,) + values.shape[1:], dtype=values.dtype)
        for r in range(self.rows):
            for c in np.flatnonzero(dense[r]):
                out[r] ^= values[c]
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseBitMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and bool(
            np.array_equal(self.bits, other.bits)
        )

    def __repr__(self) -> str:
        return f"DenseBitMatrix({self.rows}x{self.cols})"


class SparseBitMatrix:
    """
    Sparse GF(2) matrix stored as one column-index set per row.

    Supports are indexed by original row and hold original column indices.
    row_perm[i] / col_perm[j] give the original index sitting at logical
    position i / j; the decoder reorders them to expose its A/B/C/D blocks.
    """

    def __init__(self, rows: int, cols: int, row_supports: Optional[Iterable[Iterable[int]]] = None):
        if rows < 0 or cols < 0:
            raise ValueError(f"Invalid shape {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        if row_supports is None:
            self.row_supports: List[set] = [set() for _ in range(rows)]
        else:
            self.row_supports = []
            for r, support in enumerate(row_supports):
                indices = list(support)
                as_set = set(indices)
                if len(as_set) != len(indices):
                    raise ValueError(f"row {r} support contains duplicates")
                if any(c < 0 or c >= cols for c in as_set):
                    raise IndexError(f"row {r} has a column index outside [0, {cols})")
                self.row_supports.append(as_set)
            if len(self.row_supports) != rows:
                raise DimensionMismatchError(
                    f"{len(self.row_supports)} supports given for {rows} rows"
                )
        self.row_perm = np.arange(rows, dtype=np.int64)
        self.col_perm = np.arange(cols, dtype=np.int64)

    def row(self, r: int) -> Tuple[int, ...]:
        """Sorted support of original row r."""
        return tuple(sorted(self.row_supports[r]))

    def row_degree(self, r: int) -> int:
        return len(self.row_supports[r])

    def nnz(self) -> int:
        return sum(len(s) for s in self.row_supports)

    def copy(self) -> "SparseBitMatrix":
        clone = SparseBitMatrix(self.rows, self.cols)
        clone.row_supports = [set(s) for s in self.row_supports]
        clone.row_perm = self.row_perm.copy()
        clone.col_perm = self.col_perm.copy()
        return clone

    def set_permutations(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> None:
        rp = np.asarray(row_perm, dtype=np.int64)
        cp = np.asarray(col_perm, dtype=np.int64)
        if not _is_permutation(rp, self.rows) or not _is_permutation(cp, self.cols):
            raise ValueError("row_perm and col_perm must be bijections")
        self.row_perm = rp
        self.col_perm = cp

    def to_dense(self, logical: bool = False) -> DenseBitMatrix:
        """Dense mirror; logical=True lays rows/columns out by the permutation maps."""
        arr = np.zeros((self.rows, self.cols), dtype=np.uint8)
        if logical:
            col_pos = np.empty(self.cols, dtype=np.int64)
            col_pos[self.col_perm] = np.arange(self.cols)
            for i, r in enumerate(self.row_perm):
                for c in self.row_supports[r]:
                    arr[i, col_pos[c]] = 1
        else:
            for r, support in enumerate(self.row_supports):
                for c in support:
                    arr[r, c] = 1
        return DenseBitMatrix.from_array(arr)

    @classmethod
    def from_dense(cls, dense: DenseBitMatrix) -> "SparseBitMatrix":
        arr = dense.to_array()
        return cls(dense.rows, dense.cols, [np.flatnonzero(row).tolist() for row in arr])

    def check_invariants(self) -> List[str]:
        problems = []
        for r, support in enumerate(self.row_supports):
            if any(c < 0 or c >= self.cols for c in support):
                problems.append(f"row {r} has an out-of-range column")
        if not _is_permutation(self.row_perm, self.rows):
            problems.append("row_perm is not a bijection")
        if not _is_permutation(self.col_perm, self.cols):
            problems.append("col_perm is not a bijection")
        return problems

    def __repr__(self) -> str:
        return f"SparseBitMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"


def _is_permutation(perm: np.ndarray, n: int) -> bool:
    return perm.shape == (n,) and bool(np.array_equal(np.sort(perm), np.arange(n)))


def xor_row(m: SparseBitMatrix, src: int, dst: int) -> None:
    """Replace row dst by the symmetric difference of rows dst and src."""
    if not (0 <= src < m.rows and 0 <= dst < m.rows):
        raise IndexError(f"row index outside [0, {m.rows})")
    if src == dst:
        raise ValueError("xor_row needs two distinct rows")
    m.row_supports[dst].symmetric_difference_update(m.row_supports[src])


def rank(m: DenseBitMatrix) -> int:
    """GF(2) rank by forward elimination on a private copy."""
    bits = m.bits.copy()
    r = 0
    for col in range(m.cols):
        if r == m.rows:
            break
        word, bit = divmod(col, WORD_BITS)
        mask = _ONE << np.uint64(bit)
        hits = np.flatnonzero(bits[r:, word] & mask)
        if hits.size == 0:
            continue
        pivot = r + int(hits[0])
        if pivot != r:
            bits[[r, pivot]] = bits[[pivot, r]]
        below = r + 1 + np.flatnonzero(bits[r + 1:, word] & mask)
        if below.size:
            bits[below] ^= bits[r]
        r += 1
    return r


def sparse_rank(m: SparseBitMatrix) -> int:
    """GF(2) rank by reducing each row against a basis keyed by lowest column."""
    basis = {}
    for support in m.row_supports:
        reduced = set(support)
        while reduced:
            lead = min(reduced)
            if lead in basis:
                reduced ^= basis[lead]
            else:
                basis[lead] = reduced
                break
    return len(basis)


@dataclass
class DenseSolveResult:
    """Outcome of solve_dense. status is 'solved', 'rank_deficient' or 'inconsistent'."""
    status: str
    rank: int
    solution: Optional[np.ndarray] = None
    pivot_columns: List[int] = field(default_factory=list)
    free_columns: List[int] = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def solve_dense(a: DenseBitMatrix, b) -> DenseSolveResult:
    """
    Solve a·x = b over GF(2) by Gauss-Jordan elimination.

    b holds one right-hand side symbol per row of a (integer scalars or
    integer packet rows); symbols combine by XOR. The pivot for each column
    is the first remaining row with a one in it.
    """
    rhs = np.array(b, copy=True)
    if rhs.ndim == 0 or rhs.shape[0] != a.rows:
        raise DimensionMismatchError(
            f"{a.rows} rows against {0 if rhs.ndim == 0 else rhs.shape[0]} right-hand sides"
        )
    if rhs.size and not np.issubdtype(rhs.dtype, np.integer):
        raise DimensionMismatchError(f"right-hand side dtype {rhs.dtype} is not integral")

    bits = a.bits.copy()
    pivots: List[int] = []
    r = 0
    for col in range(a.cols):
        if r == a.rows:
            break
        word, bit = divmod(col, WORD_BITS)
        mask = _ONE << np.uint64(bit)
        hits = np.flatnonzero(bits[r:, word] & mask)
        if hits.size == 0:
            continue
        pivot = r + int(hits[0])
        if pivot != r:
            bits[[r, pivot]] = bits[[pivot, r]]
            rhs[[r, pivot]] = rhs[[pivot, r]]
        others = np.flatnonzero(bits[:, word] & mask)
        others = others[others != r]
        if others.size:
            bits[others] ^= bits[r]
            rhs[others] ^= rhs[r]
        pivots.append(col)
        r += 1

    rnk = len(pivots)
    free = [c for c in range(a.cols) if c not in set(pivots)]
    if rnk < a.rows and np.any(rhs[rnk:]):
        return DenseSolveResult("inconsistent", rnk, None, pivots, free)
    if rnk < a.cols:
        return DenseSolveResult("rank_deficient", rnk, None, pivots, free)
    solution = np.zeros((a.cols,) + rhs.shape[1:], dtype=rhs.dtype)
    for row, col in enumerate(pivots):
        solution[col] = rhs[row]
    return DenseSolveResult("solved", rnk, solution, pivots, free)
