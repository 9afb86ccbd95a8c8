"""Global balancing regularizer, exact reweighting, and imbalance diagnostics.

The regularizer treats each binary column in turn as a "treatment" and
penalizes the weighted mean difference of the remaining columns between the
column's 1-arm and 0-arm.  Weights are parameterized through their square
roots so non-negativity is structural.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SampleWeights",
    "ImbalanceReport",
    "DegenerateColumnWarning",
    "PATTERN_DIM_CAP",
    "balancing_loss",
    "balancing_loss_grad_omega",
    "balancing_arm_terms",
    "exact_balancing_weights",
    "max_imbalance",
    "missing_pattern_count",
    "imbalance_epsilon",
    "interaction_expand",
    "imbalance_report",
]

#: arm masses below this are treated as degenerate (all-0 / all-1 column)
DEGENERATE_MASS = 1e-12

#: pattern-indexed diagnostics refuse dimensions above this cap
PATTERN_DIM_CAP = 25


class DegenerateColumnWarning(UserWarning):
    """A treatment column has (near) zero weighted mass on one arm."""


@dataclass(frozen=True)
class SampleWeights:
    """Non-negative per-sample weights W = omega**2."""

    omega: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float).copy()
        if om.ndim != 1 or om.size == 0:
            raise ValueError("omega must be a non-empty vector")
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)

    @property
    def w(self) -> np.ndarray:
        return self.omega**2

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "SampleWeights":
        return cls(np.ones(n))

    @classmethod
    def from_weights(cls, w) -> "SampleWeights":
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        return cls(np.sqrt(w))


def _weights_vector(w, n):
    if isinstance(w, SampleWeights):
        w = w.w
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected weight vector of length {n}")
    return w


def interaction_expand(X: np.ndarray) -> np.ndarray:
    """Append all pairwise products as extra columns (second-order moments)."""
    X = np.asarray(X)
    cols = [X]
    p = X.shape[1]
    for a in range(p):
        for b in range(a + 1, p):
            cols.append((X[:, a] * X[:, b])[:, None])
    return np.concatenate(cols, axis=1)


def balancing_arm_terms(X, w, embed=None, warn=True):
    """Per-treatment arm machinery behind the balancing loss.

    For every non-degenerate column j yields
    ``(j, M_j, u_j, v_j, d_j, mass1, mass0)`` where ``M_j`` is the
    covariate matrix used for column j (the remaining raw columns, or the
    embedding of X with column j zeroed), ``u_j``/``v_j`` are the normalized
    arm indicator weights and ``d_j = M_j.T @ (u_j - v_j)`` is the arm mean
    difference vector.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    W = _weights_vector(w, n)
    terms = []
    for j in range(p):
        xj = X[:, j]
        mass1 = float(W @ xj)
        mass0 = float(W @ (1.0 - xj))
        if mass1 < DEGENERATE_MASS or mass0 < DEGENERATE_MASS:
            if warn:
                warnings.warn(
                    f"column {j} is degenerate under the given weights; "
                    "its balancing term is skipped",
                    DegenerateColumnWarning,
                    stacklevel=3,
                )
            continue
        if embed is None:
            M = np.delete(X, j, axis=1)
        else:
            Xz = X.copy()
            Xz[:, j] = 0.0
            M = np.asarray(embed(Xz), dtype=float)
        u = (W * xj) / mass1
        v = (W * (1.0 - xj)) / mass0
        d = M.T @ (u - v)
        terms.append((j, M, u, v, d, mass1, mass0))
    return terms


def balancing_loss(X, w, embed=None) -> float:
    """Sum over treatments of the squared arm-mean-difference norm.

    Zero iff every column's 1-arm and 0-arm weighted covariate means agree.
    Invariant under positive rescaling of the weights.
    """
    total = 0.0
    for _, _, _, _, d, _, _ in balancing_arm_terms(X, w, embed):
        total += float(d @ d)
    return total


def balancing_loss_grad_omega(X, w, embed=None) -> np.ndarray:
    """Analytic gradient of :func:`balancing_loss` with respect to omega.

    Chained through W = omega**2; degenerate columns contribute zero.
    """
    X = np.asarray(X, dtype=float)
    if not isinstance(w, SampleWeights):
        raise TypeError("gradient requires SampleWeights (omega parameterization)")
    grad_w = balancing_loss_grad_w(X, w, embed)
    return grad_w * 2.0 * w.omega


def balancing_loss_grad_w(X, w, embed=None) -> np.ndarray:
    """Gradient of the balancing loss with respect to the raw weights W."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    grad = np.zeros(n)
    for j, M, u, v, d, mass1, mass0 in balancing_arm_terms(X, w, embed, warn=False):
        xj = X[:, j]
        Md = M @ d
        mean1_d = float(u @ Md)
        mean0_d = float(v @ Md)
        grad += 2.0 * (
            xj * (Md - mean1_d) / mass1 - (1.0 - xj) * (Md - mean0_d) / mass0
        )
    return grad


def exact_balancing_weights(X) -> SampleWeights:
    """Reciprocal empirical pattern-frequency weights.

    Under full support (every binary pattern observed) these drive the
    balancing loss to zero and make the weighted joint pmf factorize.
    """
    X = np.asarray(X)
    n = X.shape[0]
    _, inverse, counts = np.unique(X, axis=0, return_inverse=True, return_counts=True)
    w = n / counts[inverse].astype(float)
    return SampleWeights.from_weights(w)


def max_imbalance(X, w) -> float:
    """Worst arm-mean discrepancy over all (treatment, covariate) pairs.

    Degenerate treatment columns score 1 (the 0/0 := 1 convention).
    Always in [0, 1]; returns 0 for a single column (no covariate pairs).
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p < 2:
        return 0.0
    W = _weights_vector(w, n)
    worst = 0.0
    for j in range(p):
        xj = X[:, j]
        mass1 = float(W @ xj)
        mass0 = float(W @ (1.0 - xj))
        if mass1 < DEGENERATE_MASS or mass0 < DEGENERATE_MASS:
            worst = max(worst, 1.0)
            continue
        M = np.delete(X, j, axis=1)
        d = M.T @ ((W * xj) / mass1 - (W * (1.0 - xj)) / mass0)
        worst = max(worst, float(np.max(np.abs(d))))
    return min(worst, 1.0)


def _check_pattern_dim(p):
    if p > PATTERN_DIM_CAP:
        raise ValueError(
            f"pattern enumeration is capped at p <= {PATTERN_DIM_CAP}, got p = {p}"
        )


def missing_pattern_count(X) -> int:
    """Number of binary patterns in {0,1}^p absent from the sample."""
    X = np.asarray(X)
    _check_pattern_dim(X.shape[1])
    observed = np.unique(X, axis=0).shape[0]
    return 2 ** X.shape[1] - observed


def _pattern_key(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def imbalance_epsilon(X, w) -> dict[str, float]:
    """Per-pattern gap between weighted joint pmf and product of marginals.

    Keys are bit-strings over all 2**p patterns; values sum to zero.
    """
    X = np.asarray(X)
    n, p = X.shape
    _check_pattern_dim(p)
    W = _weights_vector(w, n)
    total = W.sum()
    if total <= 0:
        raise ValueError("sum of weights must be positive")
    # weighted marginal P(x_j = 1) per column
    marg1 = (W @ X) / total
    codes = np.asarray(np.rint(X @ (1 << np.arange(p - 1, -1, -1))), dtype=np.int64)
    joint = np.bincount(codes, weights=W, minlength=2**p) / total
    eps = {}
    for code in range(2**p):
        bits = [(code >> (p - 1 - j)) & 1 for j in range(p)]
        prod = 1.0
        for j, b in enumerate(bits):
            prod *= marg1[j] if b else 1.0 - marg1[j]
        eps[_pattern_key(bits)] = float(joint[code] - prod)
    return eps


@dataclass(frozen=True)
class ImbalanceReport:
    """Summary of how far a weighted sample is from exact balance."""

    per_treatment_loss: tuple[float, ...]
    total_loss: float
    max_imbalance_alpha: float
    missing_pattern_count_m: int | None = None
    epsilon_by_pattern: dict | None = field(default=None)

    def to_json(self) -> str:
        payload = {
            "per_treatment_loss": list(self.per_treatment_loss),
            "total_loss": self.total_loss,
            "max_imbalance_alpha": self.max_imbalance_alpha,
            "missing_pattern_count_m": self.missing_pattern_count_m,
            "epsilon_by_pattern": self.epsilon_by_pattern,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ImbalanceReport":
        payload = json.loads(text)
        return cls(
            per_treatment_loss=tuple(payload["per_treatment_loss"]),
            total_loss=payload["total_loss"],
            max_imbalance_alpha=payload["max_imbalance_alpha"],
            missing_pattern_count_m=payload["missing_pattern_count_m"],
            epsilon_by_pattern=payload["epsilon_by_pattern"],
        )


def imbalance_report(X, w, pattern_cap: int = 16) -> ImbalanceReport:
    """Compute all imbalance diagnostics; pattern-indexed ones only for p <= cap."""
    X = np.asarray(X)
    per = tuple(
        float(d @ d) for _, _, _, _, d, _, _ in balancing_arm_terms(X, w, warn=False)
    )
    p = X.shape[1]
    small = p <= min(pattern_cap, PATTERN_DIM_CAP)
    return ImbalanceReport(
        per_treatment_loss=per,
        total_loss=float(sum(per)),
        max_imbalance_alpha=max_imbalance(X, w),
        missing_pattern_count_m=missing_pattern_count(X) if small else None,
        epsilon_by_pattern=imbalance_epsilon(X, w) if small else None,
    )
