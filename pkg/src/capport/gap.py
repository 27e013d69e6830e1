"""Solve the scalar terminal-value condition for the gap lambda.

The gap is the unique lambda for which the closed-form w, started at
w(0) = (1-lambda) pi_max, also hits w_plus at the other end of the no-trade
region. The solver brackets the root around the square-root-of-spread seed and
refines with Brent's method; evaluations that land outside the solvable range
(poles, blown-up branches) shrink the bracket instead of aborting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import EngineError, NoBracket, ToleranceNotReached
from .model import MarketSpec, derive, lambda_admissible_max, log_ul
from .riccati import CaseTag, WSolution, w_eval, w_solution

DEFAULT_TOL = 1e-12
RESIDUAL_TOL = 1e-10
_EXPANSION_CAP = 16


@dataclass(frozen=True)
class GapSolution:
    lam: float
    pi_minus: float
    pi_plus: float
    beta: float
    log_ul: float
    case_tag: CaseTag
    mismatch_at_root: float
    iterations: int
    bracket: tuple[float, float]
    spec: MarketSpec
    wsol: WSolution


def lambda_asymptotic(spec: MarketSpec) -> float:
    """Leading-order gap ((1/gamma)(1-pi_max)^2/(pi_star-pi_max))^{1/2} eps^{1/2}."""
    coeff = lambda_asymptotic_coefficient(spec)
    return coeff * math.sqrt(spec.epsilon)


def lambda_asymptotic_coefficient(spec: MarketSpec) -> float:
    pm, ps = spec.pi_max, spec.pi_star
    coeff = math.sqrt((1.0 / spec.gamma) * (1.0 - pm) ** 2 / (ps - pm))
    # same coefficient written through kappa; the two forms must agree up to
    # the cancellation both suffer as the constraint approaches nonbinding
    kap = spec.kappa
    alt = math.sqrt((1.0 / spec.gamma) * (kap / (1.0 - kap)) * (1.0 - pm) ** 2 / pm)
    cond = ps / (ps - pm)
    assert math.isclose(coeff, alt, rel_tol=1e-12 * max(1.0, cond))
    return coeff


def terminal_mismatch(spec: MarketSpec, lam: float) -> float:
    """w(lambda, log(u/l(lambda))) - w_plus; zero exactly at the gap."""
    sol = w_solution(spec, lam)
    x_end = log_ul(lam, spec.pi_max)
    return float(w_eval(sol, x_end)) - derive(spec).w_plus


def solve_gap(spec: MarketSpec, tol: float = DEFAULT_TOL) -> GapSolution:
    """Bracketed root solve for the gap; tol applies to lambda itself."""
    lam0 = lambda_asymptotic(spec)
    lam_cap = lambda_admissible_max(spec.pi_max)
    hi = min(4.0 * lam0, lam_cap * 0.999)
    # the seed blows up as the constraint approaches nonbinding; keep the
    # bracket ordered and let the expansion loop walk lo down if needed
    lo = min(lam0 / 4.0, 0.5 * hi)

    def safe(lam: float) -> float | None:
        try:
            return terminal_mismatch(spec, lam)
        except EngineError:
            return None

    # endpoints that fail to evaluate shrink toward the seed
    f_lo = safe(lo)
    shrinks = 0
    while f_lo is None and shrinks < 60:
        lo = 0.5 * (lo + min(lam0, hi))
        f_lo = safe(lo)
        shrinks += 1
    f_hi = safe(hi)
    shrinks = 0
    while f_hi is None and shrinks < 60:
        hi = 0.5 * (hi + lo)
        f_hi = safe(hi)
        shrinks += 1
    if f_lo is None or f_hi is None:
        raise NoBracket("terminal condition not evaluable on any candidate bracket")

    expansions = 0
    while f_lo * f_hi > 0.0 and expansions < _EXPANSION_CAP:
        lo /= 2.0
        f_lo = safe(lo)
        new_hi = min(hi * 2.0, lam_cap * 0.999)
        if new_hi > hi:
            f_new = safe(new_hi)
            if f_new is not None:
                hi, f_hi = new_hi, f_new
        if f_lo is None:
            raise NoBracket("lower bracket end stopped being evaluable")
        expansions += 1
    if f_lo * f_hi > 0.0:
        raise NoBracket(
            f"no sign change of the terminal mismatch on [{lo}, {hi}]; "
            "the spread is too large for this parameter set"
        )

    root, res = brentq(
        lambda lam: terminal_mismatch(spec, lam),
        lo, hi, xtol=tol, rtol=4 * math.ulp(1.0), maxiter=200, full_output=True,
    )
    if not res.converged:
        raise ToleranceNotReached(f"no convergence after {res.iterations} iterations")
    mismatch = terminal_mismatch(spec, root)
    if abs(mismatch) > RESIDUAL_TOL:
        raise ToleranceNotReached(f"residual {mismatch} exceeds {RESIDUAL_TOL}")

    pim = (1.0 - root) * spec.pi_max
    kap = spec.kappa
    beta = (spec.mu**2 / (2.0 * spec.gamma * spec.sigma**2)) \
        * (1.0 - (1.0 - kap * (1.0 - root)) ** 2)
    sol = w_solution(spec, root)
    return GapSolution(
        lam=root,
        pi_minus=pim,
        pi_plus=spec.pi_max,
        beta=beta,
        log_ul=log_ul(root, spec.pi_max),
        case_tag=sol.coeffs.case_tag,
        mismatch_at_root=mismatch,
        iterations=res.iterations,
        bracket=(lo, hi),
        spec=spec,
        wsol=sol,
    )
