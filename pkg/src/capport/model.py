"""Market parameters, derived frictionless quantities, and boundary geometry.

Conventions: the risky asset trades at ask price S and bid price (1-eps)*S.
All rates are annualized decimals. The cap pi_max on the risky weight must
bind strictly, i.e. pi_max < pi_star = mu / (gamma * sigma^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    ConstraintNotBinding,
    DegenerateConstraint,
    InvalidParameter,
    SignError,
    SingularRatio,
)

# formulas divide by 1 - pi_max; exclude a neighborhood of the buy-and-hold point
PI_MAX_UNIT_GUARD = 1e-6

_RATIO_TOL = 1e-12


@dataclass(frozen=True)
class MarketSpec:
    """Market and preference parameters; the single input record.

    mu is the expected excess return of the ask price over the safe rate r,
    sigma the volatility, gamma relative risk aversion, epsilon the relative
    bid-ask spread, pi_max the upper bound on the risky weight.
    """

    mu: float
    sigma: float
    r: float
    gamma: float
    epsilon: float
    pi_max: float

    def __post_init__(self) -> None:
        if not (self.mu > 0):
            raise InvalidParameter(f"mu must be > 0, got {self.mu}")
        if not (self.sigma > 0):
            raise InvalidParameter(f"sigma must be > 0, got {self.sigma}")
        if not (self.gamma > 0) or self.gamma == 1:
            raise InvalidParameter(f"gamma must be > 0 and != 1, got {self.gamma}")
        if not (0 < self.epsilon < 1):
            raise InvalidParameter(f"epsilon must be in (0,1), got {self.epsilon}")
        if not (self.pi_max > 0):
            raise InvalidParameter(f"pi_max must be > 0, got {self.pi_max}")
        if abs(self.pi_max - 1.0) < PI_MAX_UNIT_GUARD:
            raise DegenerateConstraint(
                f"pi_max = {self.pi_max} is within {PI_MAX_UNIT_GUARD} of 1 "
                "(buy-and-hold point; boundary ratios diverge)"
            )
        # strict, no tolerance: near-binding inputs must be perturbed by the caller
        if self.pi_max >= self.pi_star:
            raise ConstraintNotBinding(
                f"pi_max = {self.pi_max} >= pi_star = {self.pi_star}; cap never binds"
            )

    @property
    def pi_star(self) -> float:
        return self.mu / (self.gamma * self.sigma**2)

    @property
    def kappa(self) -> float:
        return self.pi_max / self.pi_star


@dataclass(frozen=True)
class DerivedQuantities:
    pi_star: float
    kappa: float
    u: float          # upper stock-cash ratio pi_max / (1 - pi_max)
    w_plus: float     # terminal boundary value of w
    shadow_pi_max: float


def derive(spec: MarketSpec) -> DerivedQuantities:
    """Closed-form quantities fixed by the spec alone (no gap involved)."""
    u = spec.pi_max / (1.0 - spec.pi_max)
    denom = (1.0 - spec.pi_max) + spec.pi_max * (1.0 - spec.epsilon)
    w_plus = spec.pi_max * (1.0 - spec.epsilon) / denom
    # the cap expressed in shadow-price terms: pi_max itself without leverage,
    # w_plus when the position is levered
    shadow_pi_max = spec.pi_max if spec.pi_max <= 1.0 else w_plus
    return DerivedQuantities(
        pi_star=spec.pi_star,
        kappa=spec.kappa,
        u=u,
        w_plus=w_plus,
        shadow_pi_max=shadow_pi_max,
    )


def l_of_lambda(lam: float, pi_max: float) -> float:
    """Lower stock-cash ratio l(lambda) = (1-lambda)pi_max / (1-(1-lambda)pi_max)."""
    pim = (1.0 - lam) * pi_max
    if abs(1.0 - pim) < _RATIO_TOL:
        raise SingularRatio(f"(1-lambda)*pi_max = {pim} is singular")
    return pim / (1.0 - pim)


def log_ul(lam: float, pi_max: float) -> float:
    """Signed no-trade width log(u/l(lambda)).

    Positive without leverage, negative with leverage, zero iff lambda = 0.
    Computed from the weight form, which keeps u/l positive in both cases:
    u/l = (1-(1-lambda)pi_max) / ((1-lambda)(1-pi_max)).
    """
    pim = (1.0 - lam) * pi_max
    if abs(1.0 - pim) < _RATIO_TOL:
        raise SingularRatio(f"(1-lambda)*pi_max = {pim} is singular")
    ratio = (1.0 - pim) / ((1.0 - lam) * (1.0 - pi_max))
    if ratio <= 0.0:
        raise SignError(f"u/l = {ratio} <= 0: lambda = {lam} outside admissible range")
    return math.log(ratio)


def lambda_admissible_max(pi_max: float) -> float:
    """Open upper bound on lambda inferred from u/l(lambda) > 0.

    Without leverage any lambda in (0,1) keeps the ratio positive; with
    leverage the buying boundary hits the singular point (1-lambda)pi_max = 1
    at lambda = 1 - 1/pi_max.
    """
    return 1.0 if pi_max < 1.0 else 1.0 - 1.0 / pi_max


def epsilon_from_one_sided(eps_one_sided: float) -> float:
    """Map the symmetric-fee convention (fee eps_check on both legs) to the
    relative spread used here: eps = 2*eps_check / (1 + eps_check)."""
    if not (0 <= eps_one_sided < 1):
        raise InvalidParameter(f"one-sided fee must be in [0,1), got {eps_one_sided}")
    return 2.0 * eps_one_sided / (1.0 + eps_one_sided)


def one_sided_from_epsilon(epsilon: float) -> float:
    """Inverse of epsilon_from_one_sided: eps_check = eps / (2 - eps)."""
    if not (0 <= epsilon < 1):
        raise InvalidParameter(f"epsilon must be in [0,1), got {epsilon}")
    return epsilon / (2.0 - epsilon)
