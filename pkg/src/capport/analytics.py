"""Welfare, liquidity-premium, and turnover quantities, exact and leading order.

Exact formulas take a solved gap; the leading-order expansions need only the
market spec. Powers of u/l are evaluated through the signed log width so the
leverage case (u/l < 1) needs no special handling, and the difference
(u/l)^p - 1 goes through expm1, which stays accurate when the exponent is tiny.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import MarketSpec, derive
from .gap import GapSolution

# below this |2 mu / sigma^2 - 1| the logarithmic turnover branch applies
DRIFT_SWITCH_TOL = 1e-8


@dataclass(frozen=True)
class FrictionAnalytics:
    esr: float
    esr_frictionless_constrained: float
    lip: float
    lip_c: float
    lip_t_exact: float
    lip_t_leading: float
    sht: float
    wet: float
    pi_minus: float
    pi_plus: float


@dataclass(frozen=True)
class AsymptoticAnalytics:
    """Coefficients of the eps^{1/2} (resp. eps^{-1/2} for turnover) terms and
    the expansions evaluated at the spec's own epsilon."""

    esr_coeff: float
    esr_leading: float
    lip_coeff: float
    lip_leading: float
    pi_minus_coeff: float
    pi_minus_leading: float
    lambda_coeff: float
    lambda_leading: float
    sht_coeff: float
    sht_leading: float
    wet_coeff: float
    wet_leading: float


def esr_frictionless_constrained(spec: MarketSpec) -> float:
    kap = spec.kappa
    return spec.r + (spec.mu**2 / (2 * spec.gamma * spec.sigma**2)) * (2 * kap - kap**2)


def equivalent_safe_rate(spec: MarketSpec, gap: GapSolution) -> float:
    """esr = r + (mu^2/2 gamma sigma^2)(2 kappa/(1-lambda) - kappa^2)(1-lambda)^2."""
    kap, lam = spec.kappa, gap.lam
    esr = spec.r + (spec.mu**2 / (2 * spec.gamma * spec.sigma**2)) \
        * (2 * kap / (1 - lam) - kap**2) * (1 - lam) ** 2
    # same number as r + beta; beta is the smooth-pasting quadratic at pi_minus
    assert abs(esr - (spec.r + gap.beta)) < 1e-12 * max(1.0, abs(esr))
    return esr


def liquidity_premium(spec: MarketSpec, gap: GapSolution) -> tuple[float, float, float]:
    """(lip, lip_c, lip_t_exact): total premium, constraint-only part, remainder."""
    kap, lam = spec.kappa, gap.lam
    lip = spec.mu - spec.mu * math.sqrt(2 * kap / (1 - lam) - kap**2) * (1 - lam)
    lip_c = spec.mu * (1.0 - math.sqrt(2 * kap - kap**2))
    return lip, lip_c, lip - lip_c


def lip_t_leading(spec: MarketSpec) -> float:
    """Leading-order cost part of the liquidity premium (eps^{1/2} term)."""
    pm, ps = spec.pi_max, spec.pi_star
    coeff = spec.gamma * spec.sigma**2 * math.sqrt(
        (1.0 / spec.gamma) * pm * (ps - pm) * (1 - pm) ** 2 / (2 * ps - pm)
    )
    return coeff * math.sqrt(spec.epsilon)


def _turnover(spec: MarketSpec, gap: GapSolution, num_lower: float, num_upper: float) -> float:
    nu = 2 * spec.mu / spec.sigma**2 - 1.0
    if abs(nu) < DRIFT_SWITCH_TOL:
        return (spec.sigma**2 / (2 * gap.log_ul)) * (num_lower + num_upper)
    half = spec.sigma**2 / 2
    return half * nu * (num_lower / math.expm1(nu * gap.log_ul)
                        - num_upper / math.expm1(-nu * gap.log_ul))


def share_turnover(spec: MarketSpec, gap: GapSolution) -> float:
    """Long-run shares traded per share held, per year."""
    w_plus = derive(spec).w_plus
    return _turnover(spec, gap, 1.0 - gap.pi_minus, 1.0 - w_plus)


def wealth_turnover(spec: MarketSpec, gap: GapSolution) -> float:
    """Long-run wealth traded per wealth held, per year."""
    w_plus = derive(spec).w_plus
    return _turnover(spec, gap, gap.pi_minus * (1.0 - gap.pi_minus),
                     w_plus * (1.0 - w_plus))


def asymptotics(spec: MarketSpec) -> AsymptoticAnalytics:
    """All six leading-order expansions, cross-checked against one another."""
    pm, ps, g, s2 = spec.pi_max, spec.pi_star, spec.gamma, spec.sigma**2
    root_eps = math.sqrt(spec.epsilon)

    sht_coeff = g * s2 * math.sqrt((1.0 / g) * (ps - pm) * (1 - pm) ** 2)
    wet_coeff = g * s2 * math.sqrt((1.0 / g) * (ps - pm) * (1 - pm) ** 2 * pm**2)
    esr_coeff = wet_coeff  # the welfare loss per year is the spread times wealth turnover
    lip_coeff = g * s2 * math.sqrt((1.0 / g) * pm * (ps - pm) * (1 - pm) ** 2 / (2 * ps - pm))
    assert math.isclose(lip_coeff, sht_coeff * math.sqrt(pm / (2 * ps - pm)), rel_tol=1e-13)
    pi_minus_coeff = math.sqrt((1.0 / g) * pm**2 * (1 - pm) ** 2 / (ps - pm))
    lambda_coeff = math.sqrt((1.0 / g) * (1 - pm) ** 2 / (ps - pm))

    mu2 = spec.mu**2 / (2 * g * s2)
    kap = spec.kappa
    esr_fc = spec.r + mu2 * (2 * kap - kap**2)
    lip_c = spec.mu * (1.0 - math.sqrt(2 * kap - kap**2))
    return AsymptoticAnalytics(
        esr_coeff=esr_coeff,
        esr_leading=esr_fc - esr_coeff * root_eps,
        lip_coeff=lip_coeff,
        lip_leading=lip_c + lip_coeff * root_eps,
        pi_minus_coeff=pi_minus_coeff,
        pi_minus_leading=pm - pi_minus_coeff * root_eps,
        lambda_coeff=lambda_coeff,
        lambda_leading=lambda_coeff * root_eps,
        sht_coeff=sht_coeff,
        sht_leading=sht_coeff / root_eps,
        wet_coeff=wet_coeff,
        wet_leading=wet_coeff / root_eps,
    )


def friction_analytics(spec: MarketSpec, gap: GapSolution) -> FrictionAnalytics:
    """One-stop record of the exact quantities plus the leading lip_t."""
    lip, lip_c, lip_t = liquidity_premium(spec, gap)
    return FrictionAnalytics(
        esr=equivalent_safe_rate(spec, gap),
        esr_frictionless_constrained=esr_frictionless_constrained(spec),
        lip=lip,
        lip_c=lip_c,
        lip_t_exact=lip_t,
        lip_t_leading=lip_t_leading(spec),
        sht=share_turnover(spec, gap),
        wet=wealth_turnover(spec, gap),
        pi_minus=gap.pi_minus,
        pi_plus=gap.pi_plus,
    )


@dataclass(frozen=True)
class OrderingEntry:
    pi_max: float
    sht_coeff: float


@dataclass(frozen=True)
class OrderingPair:
    tighter: float
    softer: float
    predicted_tighter_higher: bool | None   # None where the rule is silent
    actual_tighter_higher: bool
    agrees: bool | None


@dataclass(frozen=True)
class ComparativeStaticsReport:
    entries: tuple[OrderingEntry, ...]
    stationary_pi_max: float       # (1 + 2 pi_star)/3, where the coefficient peaks
    pairs: tuple[OrderingPair, ...]


def turnover_comparative_statics(mu: float, sigma: float, gamma: float,
                                 pi_max_values: list[float]) -> ComparativeStaticsReport:
    """Leading-order share-turnover coefficients for several caps, with the
    predicted tightening direction: below 1 a harder cap always raises
    turnover; above 1 it lowers turnover while both caps sit below
    (1 + 2 pi_star)/3."""
    ps = mu / (gamma * sigma**2)
    entries = []
    for pm in pi_max_values:
        if not (0 < pm < ps) or abs(pm - 1.0) < 1e-6:
            raise ValueError(f"cap {pm} must bind (0 < pi_max < pi_star, != 1)")
        coeff = gamma * sigma**2 * math.sqrt((1.0 / gamma) * (ps - pm) * (1 - pm) ** 2)
        entries.append(OrderingEntry(pi_max=pm, sht_coeff=coeff))
    stationary = (1.0 + 2.0 * ps) / 3.0

    pairs = []
    ordered = sorted(entries, key=lambda e: e.pi_max)
    for a, b in zip(ordered, ordered[1:]):          # a tighter than b
        if a.pi_max < 1.0 and b.pi_max < 1.0:
            predicted = True
        elif a.pi_max > 1.0 and b.pi_max < stationary:
            predicted = False
        else:
            predicted = None
        actual = a.sht_coeff > b.sht_coeff
        pairs.append(OrderingPair(
            tighter=a.pi_max, softer=b.pi_max,
            predicted_tighter_higher=predicted,
            actual_tighter_higher=actual,
            agrees=None if predicted is None else predicted == actual,
        ))
    return ComparativeStaticsReport(
        entries=tuple(entries), stationary_pi_max=stationary, pairs=tuple(pairs),
    )
