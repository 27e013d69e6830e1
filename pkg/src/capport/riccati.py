"""Closed-form solution w of the boundary-value reduction and its derivatives.

w solves the initial value problem

    0 = w'(x) + (1-gamma) w(x)^2 + (2 mu/sigma^2 - 1) w(x) - C(lambda),
    w(0) = (1-lambda) pi_max,

with C(lambda) = (mu^2 / (gamma sigma^4)) (1 - (1 - kappa(1-lambda))^2). The
solution is a shifted/scaled tanh, tan, or coth depending on the sign of the
discriminant and the domain of the matching inverse function. Derivatives are
always evaluated through the ODE identities, never by differentiating the
trigonometric forms; the analytic content is identical and the conditioning is
better near the boundaries.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchUndefined, PoleEncountered, RequiresLimitForm
from .model import MarketSpec, log_ul

# |disc| at or below this is treated as the measure-zero degenerate form
DISC_TOL = 1e-12


class CaseTag(str, enum.Enum):
    HYPERBOLIC_TANH = "HyperbolicTanh"
    TANGENT = "Tangent"
    HYPERBOLIC_COTH = "HyperbolicCoth"


@dataclass(frozen=True)
class RiccatiCoefficients:
    a: float          # sqrt(|disc|)
    b: float          # 1/2 - mu/sigma^2 + (gamma-1) pi_max (1-lambda)
    disc: float
    case_tag: CaseTag


@dataclass(frozen=True)
class WSolution:
    spec: MarketSpec
    lam: float
    coeffs: RiccatiCoefficients
    domain: tuple[float, float]   # [min(0, log u/l), max(0, log u/l)]
    constant: float               # C(lambda), the inhomogeneous ODE term


def classify(spec: MarketSpec, lam: float) -> RiccatiCoefficients:
    """Pick the closed-form branch from the discriminant sign and the domain
    of the inverse function, not from parameter intervals."""
    mu, sigma, gamma = spec.mu, spec.sigma, spec.gamma
    kappa = spec.kappa
    c_term = 1.0 - (1.0 - kappa * (1.0 - lam)) ** 2
    disc = (gamma - 1.0) * (mu**2 / (gamma * sigma**4)) * c_term \
        - (0.5 - mu / sigma**2) ** 2
    if abs(disc) <= DISC_TOL:
        raise RequiresLimitForm(
            f"discriminant {disc} within {DISC_TOL} of zero; "
            "the linear-fractional limit form is not implemented"
        )
    a = math.sqrt(abs(disc))
    b = 0.5 - mu / sigma**2 + (gamma - 1.0) * spec.pi_max * (1.0 - lam)
    if disc > 0.0:
        tag = CaseTag.TANGENT
    elif abs(b) < a:
        tag = CaseTag.HYPERBOLIC_TANH
    elif abs(b) > a:
        tag = CaseTag.HYPERBOLIC_COTH
    else:
        raise BranchUndefined(f"|b| = a = {a}: no inverse-function domain admits b/a")
    return RiccatiCoefficients(a=a, b=b, disc=disc, case_tag=tag)


def w_solution(spec: MarketSpec, lam: float) -> WSolution:
    """Bundle coefficients, domain and ODE constant for a given gap value."""
    coeffs = classify(spec, lam)
    x_end = log_ul(lam, spec.pi_max)
    domain = (min(0.0, x_end), max(0.0, x_end))
    kappa = spec.kappa
    constant = (spec.mu**2 / (spec.gamma * spec.sigma**4)) \
        * (1.0 - (1.0 - kappa * (1.0 - lam)) ** 2)
    return WSolution(spec=spec, lam=lam, coeffs=coeffs, domain=domain, constant=constant)


def w_eval(sol: WSolution, x):
    """Value of w at x (scalar or array).

    Raises PoleEncountered if the argument of tan reaches +-pi/2, or the coth
    argument crosses its pole, inside the requested points. Never clamps.
    """
    a, b = sol.coeffs.a, sol.coeffs.b
    mu, sigma, gamma = sol.spec.mu, sol.spec.sigma, sol.spec.gamma
    shift = mu / sigma**2 - 0.5
    x = np.asarray(x, dtype=float)
    tag = sol.coeffs.case_tag
    if tag is CaseTag.TANGENT:
        t = np.arctan(b / a) + a * x
        if np.any(np.abs(t) >= math.pi / 2):
            raise PoleEncountered(f"tan argument reached a pole (max |t| = {np.max(np.abs(t))})")
        core = a * np.tan(t)
    elif tag is CaseTag.HYPERBOLIC_TANH:
        t = np.arctanh(b / a) - a * x
        core = a * np.tanh(t)
    else:
        # coth(t) = 1/tanh(t); acoth(y) = atanh(1/y) for |y| > 1
        t = np.arctanh(a / b) - a * x
        t0 = np.arctanh(a / b)
        if np.any(np.sign(t) != np.sign(t0)) or np.any(t == 0.0):
            raise PoleEncountered("coth argument crossed its pole inside the domain")
        core = a / np.tanh(t)
    w = (core + shift) / (gamma - 1.0)
    return w if w.ndim else float(w)


def w_prime(sol: WSolution, x):
    """w'(x) from the ODE: w' = -(1-gamma) w^2 - (2 mu/sigma^2 - 1) w + C."""
    w = w_eval(sol, x)
    c2 = 2.0 * sol.spec.mu / sol.spec.sigma**2 - 1.0
    return -(1.0 - sol.spec.gamma) * np.square(w) - c2 * w + sol.constant


def w_second(sol: WSolution, x):
    """w''(x) = -(2 (1-gamma) w + (2 mu/sigma^2 - 1)) w'."""
    w = w_eval(sol, x)
    c2 = 2.0 * sol.spec.mu / sol.spec.sigma**2 - 1.0
    wp = -(1.0 - sol.spec.gamma) * np.square(w) - c2 * w + sol.constant
    return -(2.0 * (1.0 - sol.spec.gamma) * w + c2) * wp
