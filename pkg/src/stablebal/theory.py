"""Closed-form finite-sample imbalance and risk-bound calculators.

Worst-case maximum covariate imbalance as a piecewise function of the
missing-pattern count, its expectation under uniformly random occupancy
compositions, and the excess-risk upper bound for the fixed-weight variant.
All combinatorics use exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "BoundInputs",
    "RiskBound",
    "alpha_from_m",
    "expected_alpha",
    "risk_bound",
    "EXPECTED_ALPHA_DIM_CAP",
]

EXPECTED_ALPHA_DIM_CAP = 20


def _alpha_fraction(p: int, m: int) -> Fraction:
    half = 2 ** (p - 1)
    quarter = 2 ** (p - 2)
    if m == 0:
        return Fraction(0)
    if m <= quarter:
        return Fraction(quarter, half - m) - Fraction(1, 2)
    if m < half:
        return 1 - Fraction(half - m, 3 * quarter - m)
    return Fraction(1)


def alpha_from_m(p: int, m: int) -> float:
    """Worst-case maximum covariate imbalance when m binary patterns are missing.

    Piecewise in m: zero at full support, rising to 1 once half the patterns
    (or more) are absent.  The m = 2**p - 1 single-pattern case uses the
    0/0 := 1 convention.
    """
    if p < 2:
        raise ValueError("require p >= 2")
    if not 0 <= m <= 2**p - 1:
        raise ValueError(f"m must be in [0, {2**p - 1}], got {m}")
    return float(_alpha_fraction(p, m))


def expected_alpha(n: int, p: int) -> float:
    """Expectation of the worst-case imbalance over uniformly random
    occupancy compositions of n samples into the 2**p pattern cells.

    Computed with exact binomials; the composition model follows the
    stars-and-bars counting (all compositions equally likely), which is not
    the same as i.i.d. sampling from a fixed distribution.
    """
    if n < 1:
        raise ValueError("require n >= 1")
    if p < 2:
        raise ValueError("require p >= 2")
    if p > EXPECTED_ALPHA_DIM_CAP:
        raise ValueError(f"expected_alpha is capped at p <= {EXPECTED_ALPHA_DIM_CAP}")
    cells = 2**p
    total = Fraction(0)
    for m in range(cells):
        occupied = cells - 1 - m
        if occupied > n - 1:
            continue
        weight = math.comb(cells, m) * math.comb(n - 1, occupied)
        if weight:
            total += weight * _alpha_fraction(p, m)
    return float(total / math.comb(n + cells - 1, cells - 1))


@dataclass(frozen=True)
class BoundInputs:
    """Inputs to the excess-risk bound for the fixed-weight model.

    ``layer_sizes`` runs l_0..l_K; ``bias_caps`` are the per-layer bounds
    M_k on the encoder bias norms; ``loss_sup`` caps the conditional expected
    loss; ``epsilon_l1`` is the l1 mass of the per-pattern imbalance gaps.
    """

    n: int
    p: int
    layer_sizes: tuple[int, ...]
    lambda4: float
    lambda5: float
    lambda7: float
    bias_caps: tuple[float, ...]
    delta: float
    loss_sup: float
    epsilon_l1: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        K = len(self.layer_sizes) - 1
        if K < 1:
            raise ValueError("need at least one layer")
        if len(self.bias_caps) != K:
            raise ValueError("bias_caps must have one entry per layer")
        for v, name in (
            (self.lambda4, "lambda4"), (self.lambda5, "lambda5"),
            (self.lambda7, "lambda7"), (self.loss_sup, "loss_sup"),
            (self.epsilon_l1, "epsilon_l1"),
        ):
            if v < 0:
                raise ValueError(f"{name} must be non-negative")
        if any(c < 0 for c in self.bias_caps):
            raise ValueError("bias caps must be non-negative")
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))
        object.__setattr__(self, "bias_caps", tuple(float(c) for c in self.bias_caps))

    @property
    def K(self) -> int:
        return len(self.layer_sizes) - 1


@dataclass(frozen=True)
class RiskBound:
    """The three excess-risk terms and their sum (the unknowable optimal risk
    is excluded)."""

    complexity_term: float
    confidence_term: float
    imbalance_term: float

    @property
    def total(self) -> float:
        return self.complexity_term + self.confidence_term + self.imbalance_term

    def to_dict(self) -> dict:
        return {
            "complexity_term": self.complexity_term,
            "confidence_term": self.confidence_term,
            "imbalance_term": self.imbalance_term,
            "total": self.total,
        }


def risk_bound(b: BoundInputs) -> RiskBound:
    """Evaluate the three-term excess-risk upper bound.

    complexity: 2**(K+3) sqrt(2 ln(2p) / n) min(sqrt(lambda4 l_K), lambda5)
                prod_k B_k sqrt(l_{k-1}) with B_k = sqrt(lambda7 + M_k**2);
    confidence: 3 sqrt(ln(2/delta) / (2n));
    imbalance:  2 loss_sup epsilon_l1.
    """
    K = b.K
    prod = 1.0
    for k in range(1, K + 1):
        B_k = math.sqrt(b.lambda7 + b.bias_caps[k - 1] ** 2)
        prod *= B_k * math.sqrt(b.layer_sizes[k - 1])
    complexity = (
        2 ** (K + 3)
        * math.sqrt(2.0 * math.log(2.0 * b.p) / b.n)
        * min(math.sqrt(b.lambda4 * b.layer_sizes[K]), b.lambda5)
        * prod
    )
    confidence = 3.0 * math.sqrt(math.log(2.0 / b.delta) / (2.0 * b.n))
    imbalance = 2.0 * b.loss_sup * b.epsilon_l1
    return RiskBound(complexity, confidence, imbalance)
