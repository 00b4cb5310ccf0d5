#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
failure_bound.py - Lower Bound on LT Decoding Failure Probability

Evaluates

    P_F >= Σ_{i=1..k} (-1)^(i+1) C(k,i) (Σ_d Ω_d C(k-i,d)/C(k,d))^m

with m = ⌈k(1+ε)⌉ (or the real k(1+ε)). The alternating terms reach huge
magnitudes, so they are summed with compensated summation in mpmath
extended precision. Inner sums are evaluated in the log domain.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import mpmath
import numpy as np
from scipy.special import gammaln, logsumexp

from degree_dist import DegreeDistribution, validate
from lt_codec import received_symbols

logger = logging.getLogger("ltid-bound")

DEFAULT_PRECISION = 256
ERROR_TOLERANCE = 1e-9
NEGLIGIBLE_RUN = 50
EXPONENT_MODES = ("integer", "real")
_CHUNK_CELLS = 2_000_000
_EXACT_BINOMIAL_LIMIT = 100_000


class BoundPrecisionError(RuntimeError):
    """Raised when widening precision does not settle the alternating sum."""


@dataclass
class BoundResult:
    value: float
    terms_used: int
    precision_bits: int
    cancellation_flag: bool
    epsilon: float = 0.0
    exponent: float = 0.0


def log_binomial(n: int, r: int) -> float:
    """ln C(n, r)."""
    if int(n) != n or int(r) != r or not 0 <= r <= n:
        raise ValueError(f"log_binomial needs 0 <= r <= n, got n={n}, r={r}")
    n, r = int(n), int(r)
    if r == 0 or r == n:
        return 0.0
    if n <= _EXACT_BINOMIAL_LIMIT:
        return math.log(math.comb(n, r))
    return float(gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1))


def _log_inner_sums(dist: DegreeDistribution, k: int) -> np.ndarray:
    """
    L[i-1] = ln Σ_d Ω_d C(k-i,d)/C(k,d) for i = 1..k, as float64.

    C(k-i,d)/C(k,d) = Π_{t<d} (1 - i/(k-t)), accumulated as sums of log1p.
    """
    d_max = dist.d_max
    support = np.flatnonzero(dist.probs > 0)
    log_omega = np.log(dist.probs[support])
    t = np.arange(d_max, dtype=np.float64)
    out = np.empty(k)
    rows_per_chunk = max(1, _CHUNK_CELLS // max(d_max, 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(1, k + 1, rows_per_chunk):
            i = np.arange(start, min(k, start + rows_per_chunk - 1) + 1, dtype=np.float64)
            ratio = np.minimum(i[:, None] / (k - t[None, :]), 1.0)
            log_ratio = np.cumsum(np.log1p(-ratio), axis=1)
            out[start - 1: start - 1 + i.size] = logsumexp(log_ratio[:, support] + log_omega, axis=1)
    return out


def _log_inner_sums_extended(dist: DegreeDistribution, k: int) -> List[mpmath.mpf]:
    """Same inner sums at the current mpmath precision (slow fallback)."""
    probs = [(d + 1, mpmath.mpf(float(p))) for d, p in enumerate(dist.probs) if p > 0]
    out = []
    for i in range(1, k + 1):
        total = mpmath.mpf(0)
        factor = mpmath.mpf(1)
        reached = 0
        for d, omega in probs:
            while reached < d:
                if k - reached <= i:
                    factor = mpmath.mpf(0)
                    break
                factor *= mpmath.mpf(k - reached - i) / (k - reached)
                reached += 1
            if factor == 0:
                break
            total += omega * factor
        out.append(mpmath.log(total) if total > 0 else mpmath.ninf)
    return out


def _alternating_sum(log_inner: Sequence, k: int, exponent: float, precision: int,
                     rel_err: Sequence[float]) -> Tuple[mpmath.mpf, int, mpmath.mpf]:
    """Compensated sum of the signed terms; returns (value, terms_used, error estimate)."""
    with mpmath.workprec(precision):
        m = mpmath.mpf(exponent)
        threshold = mpmath.mpf(2) ** (-(precision - 8))
        acc = mpmath.mpf(0)
        comp = mpmath.mpf(0)
        err = mpmath.mpf(0)
        binom = 1
        quiet = 0
        used = 0
        for i in range(1, k + 1):
            binom = binom * (k - i + 1) // i
            used = i
            log_value = log_inner[i - 1]
            if log_value == -math.inf or log_value == mpmath.ninf:
                term = mpmath.mpf(0)
            else:
                term = mpmath.mpf(binom) * mpmath.exp(m * mpmath.mpf(log_value))
                if i % 2 == 0:
                    term = -term
            total = acc + term
            if abs(acc) >= abs(term):
                comp += (acc - total) + term
            else:
                comp += (term - total) + acc
            acc = total
            err += abs(term) * rel_err[i - 1]
            if term == 0 or abs(term) < threshold * abs(acc + comp):
                quiet += 1
                if quiet >= NEGLIGIBLE_RUN:
                    break
            else:
                quiet = 0
        return acc + comp, used, err


def _clamped(value) -> float:
    return min(1.0, max(0.0, float(value)))


def pf_lower_bound(dist: DegreeDistribution,
                   k: int,
                   epsilon: float,
                   precision: int = DEFAULT_PRECISION,
                   exponent_mode: str = "integer") -> BoundResult:
    """Lower bound on the decoding failure probability at overhead ε."""
    ok, violations = validate(dist)
    if not ok:
        raise ValueError("invalid distribution: " + "; ".join(violations))
    if dist.d_max > k:
        raise ValueError(f"d_max={dist.d_max} exceeds k={k}")
    if exponent_mode not in EXPONENT_MODES:
        raise ValueError(f"exponent mode must be one of {EXPONENT_MODES}")
    if precision < 53:
        raise ValueError(f"precision of {precision} bits is below double precision")

    if exponent_mode == "integer":
        exponent = float(received_symbols(k, epsilon))
    else:
        exponent = k * (1.0 + epsilon)
        if exponent < 0:
            raise ValueError(f"k(1+ε) = {exponent} is negative")
    if exponent == 0:
        return BoundResult(1.0, 0, precision, False, epsilon, exponent)

    log_inner = _log_inner_sums(dist, k)
    finite = np.where(np.isfinite(log_inner), np.abs(log_inner), 0.0)
    # rounding in ln(inner) is amplified m-fold by the power
    rel_err = exponent * (finite * dist.d_max + 4.0) * 2.0 ** -53
    value, used, err = _alternating_sum(log_inner, k, exponent, precision, rel_err)
    if err <= ERROR_TOLERANCE * abs(value) or err < 1e-300:
        return BoundResult(_clamped(value), used, precision, False, epsilon, exponent)

    logger.warning(
        f"cancellation in the bound sum (k={k}, ε={epsilon}, error≈{mpmath.nstr(err, 3)}); "
        f"retrying with extended-precision inner sums"
    )
    results = []
    for widened in (2 * precision, 4 * precision):
        with mpmath.workprec(widened):
            extended = _log_inner_sums_extended(dist, k)
        no_err = [0.0] * k
        v, used, _ = _alternating_sum(extended, k, exponent, widened, no_err)
        results.append((widened, v, used))
    (_, v2, _), (p4, v4, used4) = results
    with mpmath.workprec(4 * precision):
        gap = abs(v2 - v4)
        if gap > ERROR_TOLERANCE * abs(v4) and gap > 1e-300:
            raise BoundPrecisionError(
                f"bound did not settle at {4 * precision} bits (gap {mpmath.nstr(gap, 3)})"
            )
    return BoundResult(_clamped(v4), used4, p4, True, epsilon, exponent)


def bound_curve(dist: DegreeDistribution,
                k: int,
                epsilons: Sequence[float],
                precision: int = DEFAULT_PRECISION,
                exponent_mode: str = "integer") -> List[BoundResult]:
    return [pf_lower_bound(dist, k, eps, precision, exponent_mode) for eps in epsilons]
