"""Bernoulli kl divergence, its inverse, and the binomial moment sum.

Conventions used throughout: ``0 * ln 0 = 0`` and ``0 ** 0 = 1``.  An
infinite divergence is returned as ``math.inf``; callers that invert a
budget treat an infinite budget as a vacuous bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "KlBudget",
    "KlDomainError",
    "kl_bernoulli",
    "kl_inverse",
    "pinsker_inverse",
    "binomial_moment",
]

KL_INV_TOL = 1e-12
KL_INV_MAX_ITER = 200
# q + t never reaches 1 exactly: kl(q||1) is infinite for q < 1.
UPPER_CLAMP = 1.0 - 1e-15


class KlDomainError(ValueError):
    """Raised when a rate or budget lies outside its domain."""


def _check_rate(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise KlDomainError(f"{name}={value!r} is outside [0, 1]")


def _check_budget(epsilon: float) -> None:
    if math.isnan(epsilon) or epsilon < 0.0:
        raise KlDomainError(f"epsilon={epsilon!r} must be nonnegative")


@dataclass(frozen=True)
class KlBudget:
    """An empirical rate together with the kl budget it may be inverted against."""

    q: float
    epsilon: float

    def __post_init__(self) -> None:
        _check_rate("q", self.q)
        _check_budget(self.epsilon)

    def invert(self) -> float:
        """Largest increment ``t`` with ``kl(q || q + t) <= epsilon``."""
        return kl_inverse(self.q, self.epsilon)


def _xlogy_ratio(x: float, y: float) -> float:
    # x * ln(x / y) with 0 ln 0 = 0; +inf when x > 0 and y == 0.
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return math.inf
    return x * math.log(x / y)


def kl_bernoulli(q: float, p: float) -> float:
    """kl(q || p) between Bernoulli(q) and Bernoulli(p), in nats."""
    _check_rate("q", q)
    _check_rate("p", p)
    value = _xlogy_ratio(q, p) + _xlogy_ratio(1.0 - q, 1.0 - p)
    # Rounding can push an exact zero slightly negative when p == q.
    return max(value, 0.0)


def kl_inverse(q: float, epsilon: float) -> float:
    """Return ``t`` such that ``kl(q || q + t) = epsilon``.

    ``kl(q || .)`` is strictly increasing on ``[q, 1)``, so the root is found
    by bisection on ``[0, 1 - q)``.  For ``q = 1`` the answer is 0.  When the
    budget exceeds what is reachable below 1 (including ``epsilon = inf``) the
    result saturates at ``UPPER_CLAMP - q``.
    """
    _check_rate("q", q)
    _check_budget(epsilon)
    if q >= 1.0 or epsilon == 0.0:
        return 0.0
    hi = UPPER_CLAMP
    if math.isinf(epsilon) or kl_bernoulli(q, hi) <= epsilon:
        return max(hi - q, 0.0)
    lo = q
    # Keep halving past KL_INV_TOL until the bracket stops shrinking: near
    # p = 1 the slope of kl(q || .) is ~1/(1 - p), so a 1e-12 bracket alone
    # leaves a visible error in the budget.
    for _ in range(KL_INV_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if kl_bernoulli(q, mid) > epsilon:
            hi = mid
        else:
            lo = mid
    assert hi - lo <= KL_INV_TOL
    # lo and hi are now adjacent doubles around the root; take the one whose
    # divergence is closer to the budget.
    if epsilon - kl_bernoulli(q, lo) < kl_bernoulli(q, hi) - epsilon:
        hi = lo
    return _increment_to(q, hi)


def _increment_to(q: float, p: float) -> float:
    """``t`` with ``q + t == p`` in floating point when such a ``t`` exists."""
    t = p - q
    for _ in range(4):
        s = q + t
        if s == p:
            break
        t = math.nextafter(t, math.inf if s < p else -math.inf)
    return max(t, 0.0)


def pinsker_inverse(q: float, epsilon: float) -> float:
    """Pinsker relaxation ``sqrt(epsilon / 2)``, clamped so that ``q + t <= 1``."""
    _check_rate("q", q)
    _check_budget(epsilon)
    if math.isinf(epsilon):
        return 1.0 - q
    return min(math.sqrt(epsilon / 2.0), 1.0 - q)


def binomial_moment(m: int, p: float = 0.5) -> float:
    """E exp(m kl(K/m || p)) for K ~ Binomial(m, p).

    After cancelling the ``p`` factors the sum no longer depends on ``p``:
    ``sum_k C(m, k) (k/m)^k (1 - k/m)^(m - k)``.  Accumulated in log space.
    """
    if not (1 <= m <= 10_000):
        raise KlDomainError(f"m={m!r} must lie in [1, 10000]")
    _check_rate("p", p)
    k = np.arange(m + 1, dtype=float)
    log_binom = gammaln(m + 1.0) - gammaln(k + 1.0) - gammaln(m - k + 1.0)
    frac = k / m
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pos = np.where(k > 0, k * np.log(frac), 0.0)
        log_neg = np.where(k < m, (m - k) * np.log1p(-frac), 0.0)
    terms = log_binom + log_pos + log_neg
    top = terms.max()
    return float(math.exp(top) * np.exp(terms - top).sum())
