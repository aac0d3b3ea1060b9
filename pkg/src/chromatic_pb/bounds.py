"""PAC-Bayes bound evaluators.

Every evaluator returns a :class:`BoundResult` holding the budget (the
right-hand side of the concentration inequality) and the risk bounds obtained
by inverting it.  kl-type bounds are inverted both exactly (``kl^-1``) and via
Pinsker; squared-deviation bounds are inverted by a square root.

Rational inputs (``chi_star``, cover weights) stay exact until the final
formula, so reductions such as "chromatic bound with chi* = 1 is the IID
bound" hold bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Any, Sequence

from scipy.special import gammaln

from .depgraph import CoverStats
from .klcore import UPPER_CLAMP, kl_inverse, pinsker_inverse

__all__ = [
    "BoundResult",
    "BoundDomainError",
    "DeltaTooSmall",
    "BetaNotAboveOne",
    "SkewDegenerate",
    "iid_bound",
    "chromatic_bound_I",
    "chromatic_bound_II",
    "subgraph_bound",
    "ranking_bound",
    "auc_bound",
    "auc_linear_bound",
    "beta_mixing_bound",
    "generalized_chromatic_bound",
    "phi_mixing_bound",
    "generic_pacbayes_budget",
    "bayes_risk_factor",
    "chromatic_budget",
    "log_binomial",
]


class BoundDomainError(ValueError):
    pass


class DeltaTooSmall(BoundDomainError):
    def __init__(self, delta: float, threshold: float):
        super().__init__(f"delta={delta} must exceed 2(mu-1)beta(a)={threshold}")
        self.delta = delta
        self.threshold = threshold


class BetaNotAboveOne(BoundDomainError):
    def __init__(self, beta: float):
        super().__init__(f"concentration exponent beta={beta} must exceed 1")
        self.beta = beta


class SkewDegenerate(BoundDomainError):
    pass


@dataclass(frozen=True)
class BoundResult:
    empirical_gibbs: float
    kl_budget: float
    risk_bound_kl: float
    risk_bound_pinsker: float
    delta: float
    effective_m: Real
    chi_star_used: Fraction | None
    vacuous: bool
    kind: str = "kl"
    lower_bound: float | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def risk_bound(self) -> float:
        return self.risk_bound_kl


def _check_delta(delta: float) -> None:
    if not (0.0 < delta <= 1.0):
        raise BoundDomainError(f"delta={delta} must lie in (0, 1]")


def _check_kl(kl_div: float) -> None:
    if not kl_div >= 0.0:
        raise BoundDomainError(f"KL divergence {kl_div} must be nonnegative")


def _check_rate(name: str, e: float) -> None:
    if not (0.0 <= e <= 1.0):
        raise BoundDomainError(f"{name}={e} must lie in [0, 1]")


def _divisor_budget(divisor: Real, log_arg: Real, kl_div: float, delta: float) -> float:
    # (KL + ln(log_arg / delta)) / divisor; both rationals converted here only.
    return (kl_div + math.log(float(log_arg) / delta)) / float(divisor)


def chromatic_budget(m: int, omega: Real, kl_div: float, delta: float) -> float:
    """``(omega/m) [KL + ln((m + omega) / (delta omega))]``."""
    omega = Fraction(omega)
    return _divisor_budget(Fraction(m) / omega, (m + omega) / omega, kl_div, delta)


def _finish_kl(
    e_hat: float,
    budget: float,
    delta: float,
    effective_m: Real,
    chi_star: Fraction | None,
    **details: Any,
) -> BoundResult:
    t_kl = kl_inverse(e_hat, budget)
    risk_kl = e_hat + t_kl
    vacuous = math.isinf(budget) or risk_kl >= UPPER_CLAMP
    if vacuous:
        risk_kl = 1.0
    risk_p = min(1.0, e_hat + pinsker_inverse(e_hat, budget))
    return BoundResult(
        empirical_gibbs=e_hat,
        kl_budget=budget,
        risk_bound_kl=risk_kl,
        risk_bound_pinsker=risk_p,
        delta=delta,
        effective_m=effective_m,
        chi_star_used=chi_star,
        vacuous=vacuous,
        details=details,
    )


def _finish_squared(
    e_hat: float, budget: float, delta: float, effective_m: Real, chi_star: Fraction | None, **details
) -> BoundResult:
    # |e_hat - e|^2 <= budget, so e lies within sqrt(budget) of e_hat.
    radius = math.sqrt(budget)
    upper = min(1.0, e_hat + radius)
    return BoundResult(
        empirical_gibbs=e_hat,
        kl_budget=budget,
        risk_bound_kl=upper,
        risk_bound_pinsker=upper,
        delta=delta,
        effective_m=effective_m,
        chi_star_used=chi_star,
        vacuous=upper >= 1.0,
        kind="squared",
        lower_bound=max(0.0, e_hat - radius),
        details=details,
    )


def chromatic_bound_II(m: int, chi_star: Real, kl_div: float, delta: float, e_hat: float) -> BoundResult:
    """Chromatic bound with a single posterior and the fractional chromatic number."""
    if m < 1:
        raise BoundDomainError(f"m={m} must be positive")
    chi = Fraction(chi_star)
    if chi < 1:
        raise BoundDomainError(f"chi_star={chi_star} must be at least 1")
    _check_kl(kl_div)
    _check_delta(delta)
    _check_rate("e_hat", e_hat)
    budget = chromatic_budget(m, chi, kl_div, delta)
    return _finish_kl(e_hat, budget, delta, Fraction(m) / chi, chi)


def iid_bound(m: int, kl_div: float, delta: float, e_hat: float) -> BoundResult:
    """Seeger/Langford kl bound ``(KL + ln((m+1)/delta)) / m``."""
    return chromatic_bound_II(m, 1, kl_div, delta, e_hat)


def chromatic_bound_I(
    cover_stats: CoverStats, per_element_kl: Sequence[float], m: int, delta: float, e_bar: float
) -> BoundResult:
    """Bound with one posterior/prior pair per cover element; KLs are averaged by ``alpha``."""
    if len(per_element_kl) != len(cover_stats.alpha):
        raise BoundDomainError(
            f"{len(per_element_kl)} KL values for {len(cover_stats.alpha)} cover elements"
        )
    for k in per_element_kl:
        _check_kl(k)
    _check_delta(delta)
    _check_rate("e_bar", e_bar)
    omega = Fraction(cover_stats.omega)
    if omega < 1:
        raise BoundDomainError(f"chromatic weight {omega} must be at least 1")
    mixed_kl = math.fsum(a * k for a, k in zip(cover_stats.alpha, per_element_kl))
    budget = chromatic_budget(m, omega, mixed_kl, delta)
    return _finish_kl(e_bar, budget, delta, Fraction(m) / omega, omega, mixed_kl=mixed_kl)


def log_binomial(m: int, k: int) -> float:
    return float(gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1))


def subgraph_bound(
    candidates: Sequence[tuple[int, Real, float]], m: int, k: int, kl_div: float, delta: float
) -> BoundResult:
    """Best chromatic bound over induced subgraphs obtained by removing ``k`` vertices.

    ``candidates`` lists ``(subset_size, chi_star_s, e_hat_s)``; the union
    over all ``C(m, k)`` subsets is paid for with a ``ln C(m, k)`` term.
    """
    if not candidates:
        raise BoundDomainError("no subgraph candidates")
    if not 0 <= k < m:
        raise BoundDomainError(f"k={k} must lie in [0, m)")
    _check_kl(kl_div)
    _check_delta(delta)
    penalty = log_binomial(m, k)
    best = None
    for idx, (size, chi_s, e_s) in enumerate(candidates):
        if size != m - k:
            raise BoundDomainError(f"candidate {idx} has size {size}, expected {m - k}")
        chi = Fraction(chi_s)
        if chi < 1:
            raise BoundDomainError(f"candidate {idx} has chi_star {chi_s} < 1")
        _check_rate("e_hat_s", e_s)
        budget = (float(chi) / size) * (
            kl_div + math.log(float((size + chi) / chi)) + penalty + math.log(1.0 / delta)
        )
        res = _finish_kl(e_s, budget, delta, Fraction(size) / chi, chi, candidate=idx, log_binom=penalty)
        if best is None or res.risk_bound_kl < best.risk_bound_kl:
            best = res
    return best


def ranking_bound(l: int, kl_div: float, delta: float, e_hat_rank: float) -> BoundResult:
    """Bound for the pairwise ranking risk of ``l`` examples (divisor ``floor(l/2)``)."""
    if l < 2:
        raise BoundDomainError(f"l={l} must be at least 2")
    _check_kl(kl_div)
    _check_delta(delta)
    _check_rate("e_hat_rank", e_hat_rank)
    h = l // 2
    budget = _divisor_budget(h, h + 1, kl_div, delta)
    return _finish_kl(e_hat_rank, budget, delta, h, Fraction(l * (l - 1), h))


def auc_bound(l_pos: int, l_neg: int, kl_div: float, delta: float, e_hat_auc: float) -> BoundResult:
    """Bound for the bipartite (1 - AUC) risk; only the smaller class size matters."""
    if l_pos < 1 or l_neg < 1:
        raise SkewDegenerate(f"class counts {l_pos}/{l_neg} must both be positive")
    _check_kl(kl_div)
    _check_delta(delta)
    _check_rate("e_hat_auc", e_hat_auc)
    l_min = min(l_pos, l_neg)
    budget = _divisor_budget(l_min, l_min + 1, kl_div, delta)
    return _finish_kl(e_hat_auc, budget, delta, l_min, Fraction(max(l_pos, l_neg)))


def auc_linear_bound(l_min: int, mu: float, delta: float, e_hat_auc: float) -> BoundResult:
    """AUC bound for the Gaussian posterior ``N(mu w, I)`` against ``N(0, I)``: KL = mu^2 / 2."""
    if not mu > 0:
        raise BoundDomainError(f"mu={mu} must be positive")
    return auc_bound(l_min, l_min, 0.5 * mu * mu, delta, e_hat_auc)


def beta_mixing_bound(
    m: int, a: int, beta_a: float, kl_div: float, delta: float, e_hat: float
) -> BoundResult:
    """Bound for stationary beta-mixing data split into ``2 mu`` blocks of length ``a``."""
    if a < 1 or m < 2 or m % (2 * a):
        raise BoundDomainError(f"2 * mu * a = m needs a={a} to divide m/2 (m={m})")
    if not 0.0 <= beta_a <= 1.0:
        raise BoundDomainError(f"mixing coefficient {beta_a} outside [0, 1]")
    _check_kl(kl_div)
    _check_delta(delta)
    _check_rate("e_hat", e_hat)
    mu = m // (2 * a)
    threshold = 2 * (mu - 1) * beta_a
    if delta <= threshold:
        raise DeltaTooSmall(delta, threshold)
    budget = (kl_div + math.log(2 * (mu + 1) / (delta - threshold))) / mu
    return _finish_kl(e_hat, budget, delta, mu, None, block_length=a, block_count=mu)


def generic_pacbayes_budget(alpha: float, beta: float, kl_div: float, delta: float) -> float:
    """``(KL + ln(alpha beta / delta)) / (beta - 1)`` for any deviation with a
    tail ``P[X >= x] <= alpha exp(-beta d(x))``."""
    if not alpha >= 1:
        raise BoundDomainError(f"alpha={alpha} must be at least 1")
    if not beta > 1:
        raise BetaNotAboveOne(beta)
    _check_kl(kl_div)
    _check_delta(delta)
    return (kl_div + math.log(alpha * beta / delta)) / (beta - 1)


def generalized_chromatic_bound(
    m: int, chi_star: Real, loss_range: float, kl_div: float, delta: float, e_hat: float
) -> BoundResult:
    """Two-sided squared-deviation bound for losses of range ``M`` on dependent data."""
    chi = Fraction(chi_star)
    if chi < 1:
        raise BoundDomainError(f"chi_star={chi_star} must be at least 1")
    if not loss_range > 0:
        raise BoundDomainError(f"loss range {loss_range} must be positive")
    _check_rate("e_hat", e_hat)
    scale = float(chi) * loss_range**2
    beta = 2 * m / scale
    if 2 * m <= scale:
        raise BetaNotAboveOne(beta)
    budget = generic_pacbayes_budget(1.0, beta, kl_div, delta)
    return _finish_squared(e_hat, budget, delta, Fraction(m) / chi, chi, beta=beta)


def phi_mixing_bound(
    m: int, loss_range: float, phi: Sequence[float], kl_div: float, delta: float, e_hat: float
) -> BoundResult:
    """Two-sided bound for stationary phi-mixing data; ``phi[k-1]`` is phi(k)."""
    if any(p < 0 for p in phi):
        raise BoundDomainError("mixing coefficients must be nonnegative")
    if not loss_range > 0:
        raise BoundDomainError(f"loss range {loss_range} must be positive")
    _check_rate("e_hat", e_hat)
    lam = 1.0 + 2.0 * math.fsum(phi[:m])
    scale = loss_range**2 * lam**2
    beta = m / (2 * scale)
    if m <= 2 * scale:
        raise BetaNotAboveOne(beta)
    budget = generic_pacbayes_budget(2.0, beta, kl_div, delta)
    return _finish_squared(e_hat, budget, delta, m, None, beta=beta, lambda_norm=lam)


def bayes_risk_factor(e_gibbs: float) -> float:
    """Risk bound of the majority vote from the Gibbs risk: ``min(1, 2 e)``."""
    _check_rate("e_gibbs", e_gibbs)
    return min(1.0, 2.0 * e_gibbs)
