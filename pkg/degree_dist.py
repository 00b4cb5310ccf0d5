#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
degree_dist.py - Output Degree Distributions for LT Codes

Implements the degree distributions the toolkit designs and evaluates:
- DegreeDistribution: immutable probability mass over degrees 1..d_max
- Robust soliton (make_rsd), truncation (truncate), binomial / LRFC (make_lrfc)
- Inverse-CDF sampling (sample_degree, sample_degrees)
- Validation with itemized violations (validate)
- Plain-text "d probability" and JSON serialization, CLI spec parsing
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy import stats

logger = logging.getLogger("ltid-degree-dist")

SUM_TOLERANCE = 1e-12


class DegreeDistributionError(ValueError):
    """Raised for unrepresentable distributions or out-of-domain parameters."""


class DegreeDistribution:
    """
    Probability mass Ω_d over output degrees d = 1..d_max for block size k.

    probs[d - 1] holds Ω_d. Trailing zero mass is dropped, so d_max is the
    largest degree with nonzero probability. Instances are immutable.
    """

    def __init__(self, k: int, probs):
        if int(k) != k or k < 1:
            raise DegreeDistributionError(f"k must be a positive integer, got {k}")
        arr = np.array(probs, dtype=np.float64).ravel()
        if arr.size == 0:
            raise DegreeDistributionError("a distribution needs at least degree 1")
        nonzero = np.flatnonzero(arr)
        if nonzero.size:
            arr = arr[: int(nonzero[-1]) + 1]
        else:
            arr = arr[:1]
        arr.setflags(write=False)
        self.k = int(k)
        self._probs = arr
        self._cdf: Optional[np.ndarray] = None
        self._mean: Optional[float] = None

    @property
    def probs(self) -> np.ndarray:
        """Read-only array, probs[d - 1] = Ω_d."""
        return self._probs

    @property
    def d_max(self) -> int:
        return int(self._probs.size) if self._probs[-1] != 0 else 0

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(1, self._probs.size + 1)

    def prob(self, d: int) -> float:
        if 1 <= d <= self._probs.size:
            return float(self._probs[d - 1])
        return 0.0

    def mean_degree(self) -> float:
        if self._mean is None:
            self._mean = math.fsum((self.degrees * self._probs).tolist())
        return self._mean

    def cdf(self) -> np.ndarray:
        if self._cdf is None:
            cdf = np.cumsum(self._probs)
            cdf.setflags(write=False)
            self._cdf = cdf
        return self._cdf

    def as_dict(self) -> Dict[int, float]:
        """Nonzero entries as {degree: probability}."""
        return {int(d): float(p) for d, p in zip(self.degrees, self._probs) if p != 0}

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(str(self.k).encode())
        digest.update(self._probs.tobytes())
        return digest.hexdigest()

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """JSON object form {k, probs: {d: Ω_d}}"""
        return {"k": self.k, "probs": {str(d): p for d, p in self.as_dict().items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        """Plain-text form, one "d probability" line per nonzero degree."""
        lines = [f"# k {self.k}"]
        lines.extend(f"{d} {p!r}" for d, p in self.as_dict().items())
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "DegreeDistribution":
        try:
            k = int(data["k"])
            mapping = {int(d): float(p) for d, p in data["probs"].items()}
        except (KeyError, TypeError, ValueError) as e:
            raise DegreeDistributionError(f"Malformed distribution object: {e}") from e
        return from_mapping(k, mapping)

    @staticmethod
    def from_json(text: str) -> "DegreeDistribution":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise DegreeDistributionError(f"Invalid distribution JSON: {e}") from e
        return DegreeDistribution.from_dict(data)

    @staticmethod
    def from_text(text: str, k: Optional[int] = None) -> "DegreeDistribution":
        mapping: Dict[int, float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "k" and k is None:
                    k = int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DegreeDistributionError(f"line {lineno}: expected 'd probability'")
            try:
                d, p = int(parts[0]), float(parts[1])
            except ValueError as e:
                raise DegreeDistributionError(f"line {lineno}: {e}") from e
            if d in mapping:
                raise DegreeDistributionError(f"line {lineno}: degree {d} listed twice")
            mapping[d] = p
        if k is None:
            raise DegreeDistributionError("block size k missing (no '# k' header given)")
        return from_mapping(k, mapping)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DegreeDistribution):
            return NotImplemented
        return self.k == other.k and bool(np.array_equal(self._probs, other._probs))

    def __hash__(self) -> int:
        return hash(self.content_hash())

    def __repr__(self) -> str:
        return f"DegreeDistribution(k={self.k}, d_max={self.d_max}, mean={self.mean_degree():.4f})"


def from_mapping(k: int, mapping: Mapping[int, float]) -> DegreeDistribution:
    """Build from {degree: probability}; degree 0 is unrepresentable."""
    if not mapping:
        raise DegreeDistributionError("empty degree mapping")
    degrees = [int(d) for d in mapping]
    if min(degrees) < 1:
        raise DegreeDistributionError("degree 0 (or negative) output symbols are not representable")
    probs = np.zeros(max(degrees), dtype=np.float64)
    for d, p in mapping.items():
        probs[int(d) - 1] = p
    return DegreeDistribution(k, probs)


def from_array(k: int, probs) -> DegreeDistribution:
    """Build from a dense array with probs[d - 1] = Ω_d; trailing zeros are dropped."""
    return DegreeDistribution(k, probs)


def mean_degree(dist: DegreeDistribution) -> float:
    return dist.mean_degree()


def validate(dist: DegreeDistribution) -> Tuple[bool, List[str]]:
    """
    Check the distribution invariants.

    Returns:
        Tuple of (is_valid, violations)
    """
    violations = []
    probs = dist.probs
    if not np.all(np.isfinite(probs)):
        violations.append("non-finite probability")
    if np.any(probs < 0):
        bad = (np.flatnonzero(probs < 0) + 1).tolist()
        violations.append(f"negative probability at degrees {bad}")
    total = math.fsum(probs.tolist())
    if not abs(total - 1.0) <= SUM_TOLERANCE:
        violations.append(f"sum ≠ 1 (sum = {total!r})")
    if dist.d_max == 0:
        violations.append("no degree carries mass")
    if probs.size > dist.k:
        violations.append(f"d_max = {probs.size} exceeds k = {dist.k}")
    return (not violations), violations


def _normalized(k: int, masses: np.ndarray) -> DegreeDistribution:
    total = math.fsum(masses.tolist())
    dist = DegreeDistribution(k, masses / total)
    ok, violations = validate(dist)
    if not ok:
        raise DegreeDistributionError("; ".join(violations))
    return dist


def rsd_spike_degree(k: int, c: float, delta: float) -> int:
    """Spike index ⌊k/S⌋ of the robust soliton, clamped to [1, k]."""
    s = c * math.log(k / delta) * math.sqrt(k)
    return min(k, max(1, int(math.floor(k / s))))


def make_rsd(k: int, c: float, delta: float) -> DegreeDistribution:
    """
    Robust soliton distribution.

    S = c·ln(k/δ)·√k; ρ(1) = 1/k, ρ(d) = 1/(d(d-1)); τ(d) = S/(dk) below the
    spike ⌊k/S⌋, τ(spike) = S·ln(S/δ)/k; Ω = (ρ + τ)/β.
    """
    if int(k) != k or k < 1:
        raise DegreeDistributionError(f"k must be a positive integer, got {k}")
    if not c > 0:
        raise DegreeDistributionError(f"c must be positive, got {c}")
    if not 0 < delta < 1:
        raise DegreeDistributionError(f"delta must lie in (0, 1), got {delta}")
    k = int(k)
    if k == 1:
        return DegreeDistribution(1, [1.0])

    d = np.arange(1, k + 1, dtype=np.float64)
    rho = np.empty(k)
    rho[0] = 1.0 / k
    rho[1:] = 1.0 / (d[1:] * (d[1:] - 1.0))

    s = c * math.log(k / delta) * math.sqrt(k)
    spike = rsd_spike_degree(k, c, delta)
    tau = np.zeros(k)
    tau[: spike - 1] = s / (d[: spike - 1] * k)
    tau[spike - 1] = s * math.log(s / delta) / k
    if tau[spike - 1] < 0:
        raise DegreeDistributionError(
            f"c={c}, delta={delta} give a negative spike mass at degree {spike}"
        )
    return _normalized(k, rho + tau)


def make_lrfc(k: int, mean_degree: float) -> DegreeDistribution:
    """Binomial(k, mean_degree/k) degrees conditioned on d ≥ 1."""
    if int(k) != k or k < 1:
        raise DegreeDistributionError(f"k must be a positive integer, got {k}")
    if not 0 < mean_degree <= k:
        raise DegreeDistributionError(f"mean degree must lie in (0, {k}], got {mean_degree}")
    k = int(k)
    p = mean_degree / k
    pmf = stats.binom.pmf(np.arange(1, k + 1), k, p)
    return _normalized(k, np.asarray(pmf, dtype=np.float64))


def truncate(dist: DegreeDistribution, d_max: int) -> DegreeDistribution:
    """Lump all mass at degrees ≥ d_max into d_max."""
    if int(d_max) != d_max or not 1 <= d_max <= dist.k:
        raise DegreeDistributionError(f"d_max must lie in [1, {dist.k}], got {d_max}")
    d_max = int(d_max)
    probs = dist.probs
    if probs.size <= d_max:
        return dist
    head = np.array(probs[:d_max], dtype=np.float64)
    head[d_max - 1] = math.fsum(probs[d_max - 1:].tolist())
    return DegreeDistribution(dist.k, head)


def sample_degree(dist: DegreeDistribution, rng: np.random.Generator) -> int:
    """Draw one degree by inverse-CDF sampling."""
    return int(sample_degrees(dist, rng, 1)[0])


def sample_degrees(dist: DegreeDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n degrees by inverse-CDF sampling (one uniform per draw)."""
    cdf = dist.cdf()
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, dist.d_max - 1, out=idx)
    return idx + 1


def parse_dist_spec(spec: str, k: int) -> DegreeDistribution:
    """
    Parse the CLI distribution grammar:
        rsd:c,delta | rsd-trunc:c,delta,dmax | lrfc:mean | file:PATH
    """
    kind, _, args = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "file":
        if not args:
            raise DegreeDistributionError("file: needs a path")
        return load_distribution(args, k)
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError as e:
        raise DegreeDistributionError(f"bad numbers in '{spec}': {e}") from e
    if kind == "rsd" and len(values) == 2:
        return make_rsd(k, values[0], values[1])
    if kind == "rsd-trunc" and len(values) == 3:
        return truncate(make_rsd(k, values[0], values[1]), int(values[2]))
    if kind == "lrfc" and len(values) == 1:
        return make_lrfc(k, values[0])
    raise DegreeDistributionError(
        f"unrecognised distribution '{spec}' "
        "(expected rsd:c,delta | rsd-trunc:c,delta,dmax | lrfc:mean | file:PATH)"
    )


def load_distribution(path: str, k: Optional[int] = None) -> DegreeDistribution:
    """Load a distribution file in JSON or plain-text form."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        dist = DegreeDistribution.from_json(text)
    else:
        dist = DegreeDistribution.from_text(text, k)
    if k is not None and dist.k != k:
        logger.warning(f"{path} was designed for k={dist.k}, using it with k={k}")
        dist = DegreeDistribution(k, dist.probs)
    ok, violations = validate(dist)
    if not ok:
        raise DegreeDistributionError(f"{path}: " + "; ".join(violations))
    return dist


def save_distribution(dist: DegreeDistribution, path: str) -> None:
    """Write JSON when the path ends in .json, plain text otherwise."""
    payload = dist.to_json() + "\n" if path.lower().endswith(".json") else dist.to_text()
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload)
    logger.info(f"Wrote distribution (k={dist.k}, d_max={dist.d_max}) to {path}")
