"""Sample-compression generalization bounds.

A classifier recoverable from s of its m training samples plus n bits of
side information per sample (and n more overall) admits the risk bound

    F(m, n, s, delta) = (n + n*s + s + s*ln(m/s) + ln(1/delta)) / (m - s)

Values above 1 are vacuous but still meaningful for trend comparisons,
so they are returned unclamped.  The exact zero-error form
1 - exp(-(KL + ln(1/delta)) / (m - s)) is always at or below the compact
ratio; both are provided, along with the Bernoulli KL and its inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import ValidationError


@dataclass(frozen=True)
class BoundInputs:
    """m training samples, n neurons, s support vectors, confidence delta."""

    m: int
    n: int
    s: int
    delta: float = 0.05

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.s < 0:
            raise ValidationError("s must be nonnegative")
        if self.s >= self.m:
            raise ValidationError(f"s must be smaller than m (got s={self.s}, m={self.m})")
        if not 0.0 < self.delta <= 1.0:
            raise ValidationError("delta must lie in (0, 1]")


@dataclass(frozen=True)
class BreakdownRow:
    step: str
    ways: str          # counting expression for this specification step
    contribution: float


@dataclass(frozen=True)
class BoundBreakdown:
    rows: tuple[BreakdownRow, ...]

    def total(self) -> float:
        return sum(r.contribution for r in self.rows)


def _nsv_term(m: int, s: int) -> float:
    # s * ln(m/s) + s, with the 0*ln(0) = 0 convention at s = 0
    if s == 0:
        return 0.0
    return s * math.log(m / s) + s


def bound_value(inputs: BoundInputs, tighter_binomial: bool = False) -> float:
    """Risk bound F(m, n, s, delta); may exceed 1 (vacuous, unclamped).

    With tighter_binomial=True the s + s*ln(m/s) overestimate of the
    subset-selection cost is replaced by ln(C(m, s)) exactly.
    """
    m, n, s, delta = inputs.m, inputs.n, inputs.s, inputs.delta
    if tighter_binomial:
        select = math.lgamma(m + 1) - math.lgamma(s + 1) - math.lgamma(m - s + 1)
    else:
        select = _nsv_term(m, s)
    numerator = n + n * s + select + math.log(1.0 / delta)
    return numerator / (m - s)


def bound_exact_zte(kl_budget: float, m: int, s: int, delta: float) -> float:
    """Zero-training-error bound 1 - exp(-(KL + ln(1/delta)) / (m - s)).

    Always at or below the compact form (KL + ln(1/delta)) / (m - s).
    """
    if kl_budget < 0:
        raise ValidationError("kl_budget must be nonnegative")
    if s >= m:
        raise ValidationError("s must be smaller than m")
    if not 0.0 < delta <= 1.0:
        raise ValidationError("delta must lie in (0, 1]")
    exponent = (kl_budget + math.log(1.0 / delta)) / (m - s)
    return -math.expm1(-exponent)


def is_vacuous(value: float) -> bool:
    return value > 1.0


def kl_bernoulli(q: float, p: float) -> float:
    """KL divergence between Bernoulli(q) and Bernoulli(p).

    Conventions: 0*ln(0) = 0; when p is 0 or 1 and q differs, the
    divergence is +inf.
    """
    if not 0.0 <= q <= 1.0 or not 0.0 <= p <= 1.0:
        raise ValidationError("q and p must lie in [0, 1]")
    if q == p:
        return 0.0
    if p in (0.0, 1.0):
        return math.inf
    value = 0.0
    if q > 0.0:
        value += q * math.log(q / p)
    if q < 1.0:
        value += (1.0 - q) * math.log((1.0 - q) / (1.0 - p))
    return value


def kl_inverse(q: float, budget: float, tol: float = 1e-12) -> float:
    """Largest p >= q with kl_bernoulli(q, p) <= budget, by bisection."""
    if not 0.0 <= q <= 1.0:
        raise ValidationError("q must lie in [0, 1]")
    if budget < 0.0:
        raise ValidationError("budget must be nonnegative")
    if budget == math.inf or q == 1.0:
        return 1.0
    lo, hi = q, 1.0
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = (lo + hi) / 2.0
        if kl_bernoulli(q, mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


def breakdown(inputs: BoundInputs) -> BoundBreakdown:
    """Per-step contributions to (m - s) * F, excluding the confidence
    term: choosing the support subset, specifying its embedding, and
    specifying the classifier given the embedding."""
    m, n, s = inputs.m, inputs.n, inputs.s
    rows = (
        BreakdownRow("nsv-selection", "2^s * C(m, s)", _nsv_term(m, s)),
        BreakdownRow("embedding-specification", "2^(n*s)", float(n * s)),
        BreakdownRow("classifier-specification", "2^n", float(n)),
    )
    return BoundBreakdown(rows)
