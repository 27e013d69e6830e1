"""Monte Carlo verification of the stationary policy in the shadow market.

The log stock-cash ratio Y is simulated as a reflected Euler scheme on its
no-trade interval.  The optimal strategy is reconstructed from the reflection
pushes: the local time accumulated at the buy barrier maps to share purchases
at the ask, the local time at the sell barrier to sales at the bid.  Positions
are booked multiplicatively in logs, so a century of small trades loses no
precision to cancellation.

A plainly projected Euler chain underestimates boundary local time by
O(sqrt(dt)) because the continuous path can touch a barrier inside a step
whose endpoints stay interior.  At usable step sizes the resulting turnover
bias is several standard errors wide.  The scheme therefore reflects on
barriers moved inward by 0.5826 sigma sqrt(dt) (the discrete-monitoring
continuity correction), which removes the leading-order bias; turnover is
still tallied with the exact boundary weights of the continuous policy.

Every step also recomputes the risky weight held in the portfolio from an
independent integration of the stock return, rather than trusting the
position bookkeeping, and checks it against the policy cap.  Spread
containment of the shadow price and trade localization at the barriers are
audited the same way.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, NonpositiveWealth, NumericalBlowup
from .gap import GapSolution
from .model import MarketSpec, derive
from .riccati import w_eval

# -zeta(1/2)/sqrt(2*pi): mean overshoot of a Gaussian walk at a barrier,
# in units of sigma*sqrt(dt).  Shifting each reflecting barrier inward by
# this amount makes the projected chain's local time match the continuous
# one to first order.
BARRIER_SHIFT = 0.5825971579390107

# The inward shift must leave a genuine interior; cap it at a quarter of
# the band width per side.
MAX_SHIFT_FRACTION = 0.25

_BLOWUP_CHECK_STRIDE = 1024


@dataclass(frozen=True)
class Endowment:
    """Initial holdings: safe units, risky shares, and the entry stock price."""

    safe_units: float = 1.0
    risky_shares: float = 0.0
    stock_price: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.safe_units):
            raise InvalidParameter("safe_units must be finite")
        if not (math.isfinite(self.risky_shares) and self.risky_shares >= 0.0):
            raise InvalidParameter("risky_shares must be finite and nonnegative")
        if not (math.isfinite(self.stock_price) and self.stock_price > 0.0):
            raise InvalidParameter("stock_price must be positive")


@dataclass(frozen=True)
class SimConfig:
    horizon_years: float
    dt: float
    n_paths: int
    seed: int
    initial_endowment: Endowment = field(default_factory=Endowment)
    reflection_tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon_years) and self.horizon_years > 0.0):
            raise InvalidParameter("horizon_years must be positive")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise InvalidParameter("dt must be positive")
        steps = self.horizon_years / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise InvalidParameter("horizon_years must be an integer number of steps")
        if self.n_paths < 1:
            raise InvalidParameter("n_paths must be at least 1")
        if not (math.isfinite(self.reflection_tolerance) and self.reflection_tolerance > 0.0):
            raise InvalidParameter("reflection_tolerance must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon_years / self.dt))


@dataclass
class PathState:
    """Mutable per-chunk state; one entry per path in every array.

    Positions and prices are carried in logs.  phi0_sign is constant after
    the entry trade (negative exactly when the policy is levered), so the
    safe account needs only its log magnitude.
    """

    y: np.ndarray              # reflected log ratio, inner-barrier domain
    lower_push: np.ndarray     # cumulative push off the lower barrier
    upper_push: np.ndarray     # cumulative push off the upper barrier
    log_price: np.ndarray      # log ask price S_t
    log_rel: np.ndarray        # log S_t/S0_t, integrated independently of y
    log_phi: np.ndarray        # log risky shares
    log_phi0_abs: np.ndarray   # log |safe units|
    phi0_sign: float
    buy_shares: np.ndarray     # cumulative shares bought
    sell_shares: np.ndarray    # cumulative shares sold
    buy_wealth: np.ndarray     # cumulative purchase value at the ask
    sell_wealth: np.ndarray    # cumulative sale value at the bid

    @property
    def price(self) -> np.ndarray:
        return np.exp(self.log_price)

    @property
    def phi(self) -> np.ndarray:
        return np.exp(self.log_phi)

    @property
    def phi0(self) -> np.ndarray:
        return self.phi0_sign * np.exp(self.log_phi0_abs)


@dataclass(frozen=True)
class StrategyCoefficients:
    """Per-unit-push responses of the booked strategy at each barrier.

    A push of size p off the buy barrier scales shares by exp(buy_dlogphi*p)
    and the safe account by exp(buy_dlogphi0*p); the sell barrier works the
    same way.  The weights pi_buy/pi_sell value the trades for the wealth
    turnover tally.
    """

    buy_dlogphi: float
    sell_dlogphi: float
    buy_dlogphi0: float
    sell_dlogphi0: float
    pi_buy: float
    pi_sell: float
    leveraged: bool


@dataclass(frozen=True)
class SimulationResult:
    empirical_sht: float
    empirical_sht_se: float
    empirical_wet: float
    empirical_wet_se: float
    spread_violations: int
    max_spread_gap: float
    mislocalized_trade_fraction: float
    max_shadow_weight_excess: float
    terminal_log_wealth_mean: float
    per_path_sht: np.ndarray
    per_path_wet: np.ndarray
    n_paths: int
    n_steps: int


def strategy_coefficients(gap: GapSolution) -> StrategyCoefficients:
    """Log-slopes of the position processes at the two barriers.

    Self-financing at the buy barrier (trades at the ask S) and sell barrier
    (trades at the bid (1-eps)S) pins the joint motion of (phi, phi0) to the
    reflection local times; with the boundary conditions on w both slopes
    collapse to expressions in the boundary weights alone.
    """
    pi_minus = gap.pi_minus
    w_plus = derive(gap.spec).w_plus
    lev = pi_minus > 1.0
    cb = abs(1.0 - pi_minus)
    cs = abs(1.0 - w_plus)
    if lev:
        b0, s0 = pi_minus, -w_plus
    else:
        b0, s0 = -pi_minus, w_plus
    return StrategyCoefficients(
        buy_dlogphi=cb,
        sell_dlogphi=cs,
        buy_dlogphi0=b0,
        sell_dlogphi0=s0,
        pi_buy=pi_minus,
        pi_sell=w_plus,
        leveraged=lev,
    )


def step(y: np.ndarray, increment: np.ndarray, lo: float, hi: float):
    """One Euler increment with Skorokhod projection onto [lo, hi].

    Returns the projected state and the two push magnitudes; a push lands
    the path exactly on its barrier.
    """
    y_new = y + increment
    d_lo = np.maximum(lo - y_new, 0.0)
    y_new = y_new + d_lo
    d_hi = np.maximum(y_new - hi, 0.0)
    y_new = y_new - d_hi
    return y_new, d_lo, d_hi


def evolve_strategy(
    log_phi: np.ndarray,
    log_phi0_abs: np.ndarray,
    buy_push: np.ndarray,
    sell_push: np.ndarray,
    co: StrategyCoefficients,
):
    """Apply one step's reflection pushes to the booked positions.

    Zero pushes leave the positions untouched.  Returns the updated logs
    with the signed log-share increments of each side.
    """
    d_up = co.buy_dlogphi * buy_push
    d_down = co.sell_dlogphi * sell_push
    log_phi = log_phi + d_up - d_down
    log_phi0_abs = log_phi0_abs + co.buy_dlogphi0 * buy_push + co.sell_dlogphi0 * sell_push
    return log_phi, log_phi0_abs, d_up, d_down


def shadow_price(gap: GapSolution, y, price=1.0):
    """Stationary shadow price S~ = S * eta(Y) with eta = w/(l e^Y (1 - w)).

    eta equals 1 at the buy barrier and 1-eps at the sell barrier, so S~
    moves inside the bid-ask band.
    """
    w = w_eval(gap.wsol, y)
    ratio = w / (1.0 - w)
    ell = gap.pi_minus / (1.0 - gap.pi_minus)
    return price * np.exp(np.log(np.abs(ratio / ell)) - np.asarray(y, dtype=float))


def _log_eta(gap: GapSolution, y: np.ndarray) -> np.ndarray:
    w = w_eval(gap.wsol, y)
    ell = gap.pi_minus / (1.0 - gap.pi_minus)
    return np.log(np.abs(w / ((1.0 - w) * ell))) - y


def initial_y(endowment: Endowment, gap: GapSolution) -> float:
    """Entry point of the reflected ratio for a given endowment.

    An ask-valued risky weight below the buy boundary enters at the buy
    barrier, one above the policy cap at the sell barrier, anything in
    between holds and maps through z = l e^y.  Raises NonpositiveWealth if
    the endowment cannot be liquidated to positive cash.
    """
    spec = gap.spec
    s0 = endowment.stock_price
    ask_wealth = endowment.safe_units + endowment.risky_shares * s0
    bid_wealth = endowment.safe_units + endowment.risky_shares * (1.0 - spec.epsilon) * s0
    if bid_wealth <= 0.0:
        raise NonpositiveWealth("endowment liquidates to nonpositive wealth")
    pi0 = endowment.risky_shares * s0 / ask_wealth
    if pi0 < gap.pi_minus:
        return 0.0
    if pi0 > spec.pi_max:
        return gap.log_ul
    ell = gap.pi_minus / (1.0 - gap.pi_minus)
    z0 = endowment.risky_shares * s0 / endowment.safe_units
    return math.log(z0 / ell)


def _entry_state(spec: MarketSpec, gap: GapSolution, endowment: Endowment, lo_in: float, hi_in: float):
    """Trade the endowment onto the inner no-trade band.

    Buys execute at the ask, sales at the bid, and the resulting positions
    satisfy phi*S/(phi0*S0) = l e^y exactly at the entry point, so the
    booked weight starts on the policy.  The entry trade is a transient and
    is excluded from the turnover tallies.
    """
    s0 = endowment.stock_price
    eps = spec.epsilon
    ell = gap.pi_minus / (1.0 - gap.pi_minus)
    ask_wealth = endowment.safe_units + endowment.risky_shares * s0
    bid_wealth = endowment.safe_units + endowment.risky_shares * (1.0 - eps) * s0
    if bid_wealth <= 0.0:
        raise NonpositiveWealth("endowment liquidates to nonpositive wealth")
    pi0 = endowment.risky_shares * s0 / ask_wealth

    leveraged = gap.pi_minus > 1.0
    y_buy, y_sell = (hi_in, lo_in) if leveraged else (lo_in, hi_in)

    def ask_weight(y: float) -> float:
        z = ell * math.exp(y)
        return z / (1.0 + z)

    p_buy = ask_weight(y_buy)
    p_sell = ask_weight(y_sell)
    if pi0 < p_buy:
        # buy at the ask up to the inner buy barrier
        y0 = y_buy
        phi = p_buy * ask_wealth / s0
        phi0 = (1.0 - p_buy) * ask_wealth
    elif pi0 > p_sell:
        # sell at the bid down to the inner sell barrier
        y0 = y_sell
        z = ell * math.exp(y_sell)
        q = (1.0 - eps) * z / (1.0 + (1.0 - eps) * z)
        phi = q * bid_wealth / ((1.0 - eps) * s0)
        phi0 = (1.0 - q) * bid_wealth
    else:
        y0 = math.log(endowment.risky_shares * s0 / (endowment.safe_units * ell))
        phi = endowment.risky_shares
        phi0 = endowment.safe_units
    if phi <= 0.0 or phi0 == 0.0:
        raise NonpositiveWealth("entry trade produced a degenerate position")
    return y0, math.log(phi), math.log(abs(phi0)), math.copysign(1.0, phi0)


def _chunk_size(n_paths: int, n_steps: int) -> int:
    # keep each chunk's normal draws near 64 MB; fixed rule so the chunking
    # (and hence every float) is independent of the worker environment
    budget = 8_000_000
    return max(1, min(n_paths, budget // max(1, n_steps)))


def run(
    spec: MarketSpec,
    gap: GapSolution,
    config: SimConfig,
    trace_path: str | None = None,
    trace_index: int = 0,
    chunk_size: int | None = None,
) -> SimulationResult:
    """Simulate the reflected policy and audit it against the closed forms.

    Returns empirical share and wealth turnover with standard errors, the
    spread/localization/weight-cap audit counters, and the mean terminal
    log wealth under bid-side liquidation.  Results are bit-identical for a
    fixed seed regardless of chunk_size.
    """
    if gap.spec != spec:
        raise InvalidParameter("gap solution was computed for a different market")
    n_steps = config.n_steps
    n_paths = config.n_paths
    dt = config.dt
    mu, sigma, r, eps = spec.mu, spec.sigma, spec.r, spec.epsilon

    lo, hi = gap.wsol.domain
    width = hi - lo
    shift = min(BARRIER_SHIFT * sigma * math.sqrt(dt), MAX_SHIFT_FRACTION * width)
    lo_in, hi_in = lo + shift, hi - shift

    co = strategy_coefficients(gap)
    buy_is_lower = not co.leveraged  # y = 0 is the buy barrier in both cases
    pi_cap = derive(spec).shadow_pi_max

    y0, lp0, lp0abs, sign0 = _entry_state(spec, gap, config.initial_endowment, lo_in, hi_in)

    drift = (mu - 0.5 * sigma * sigma) * dt
    r_dt = r * dt
    vol = sigma * math.sqrt(dt)
    spread_allowed = config.reflection_tolerance * math.sqrt(dt)
    eta_lo, eta_hi = 1.0 - eps - spread_allowed, 1.0 + spread_allowed

    children = np.random.SeedSequence(config.seed).spawn(n_paths)
    chunk = chunk_size if chunk_size is not None else _chunk_size(n_paths, n_steps)
    if chunk < 1:
        raise InvalidParameter("chunk_size must be at least 1")

    sht_parts: list[np.ndarray] = []
    wet_parts: list[np.ndarray] = []
    log_wealth_parts: list[np.ndarray] = []
    volume_parts: list[np.ndarray] = []
    mislocal_parts: list[np.ndarray] = []
    spread_violations = 0
    max_spread_gap = 0.0
    max_excess = -math.inf

    trace_rows: list[tuple] = []
    log_s0_entry = math.log(config.initial_endowment.stock_price)

    for start in range(0, n_paths, chunk):
        m = min(chunk, n_paths - start)
        incr = np.empty((m, n_steps))
        for i in range(m):
            rng = np.random.Generator(np.random.Philox(children[start + i]))
            incr[i] = rng.standard_normal(n_steps)
        incr *= vol
        incr += drift

        state = PathState(
            y=np.full(m, y0),
            lower_push=np.zeros(m),
            upper_push=np.zeros(m),
            log_price=np.full(m, log_s0_entry),
            log_rel=np.zeros(m),
            log_phi=np.full(m, lp0),
            log_phi0_abs=np.full(m, lp0abs),
            phi0_sign=sign0,
            buy_shares=np.zeros(m),
            sell_shares=np.zeros(m),
            buy_wealth=np.zeros(m),
            sell_wealth=np.zeros(m),
        )
        sht_tally = np.zeros(m)
        wet_tally = np.zeros(m)
        vol_tally = np.zeros(m)
        mislocal_tally = np.zeros(m)

        traced = trace_path is not None and start <= trace_index < start + m
        ti = trace_index - start if traced else -1

        for k in range(n_steps):
            dyk = incr[:, k]
            phi_pre = np.exp(state.log_phi)
            state.y, d_lo, d_hi = step(state.y, dyk, lo_in, hi_in)
            state.lower_push += d_lo
            state.upper_push += d_hi
            buy_push, sell_push = (d_lo, d_hi) if buy_is_lower else (d_hi, d_lo)

            state.log_phi, state.log_phi0_abs, d_up, d_down = evolve_strategy(
                state.log_phi, state.log_phi0_abs, buy_push, sell_push, co
            )
            sht_tally += d_up
            sht_tally += d_down
            wet_tally += co.pi_buy * d_up
            wet_tally += co.pi_sell * d_down

            state.log_price += dyk
            state.log_price += r_dt
            state.log_rel += dyk

            price = np.exp(state.log_price)
            bought = phi_pre * np.expm1(d_up)
            sold = -phi_pre * np.expm1(-d_down)
            state.buy_shares += bought
            state.sell_shares += sold
            state.buy_wealth += bought * price
            state.sell_wealth += sold * ((1.0 - eps) * price)

            vol_step = bought + sold
            vol_tally += vol_step
            idle = (d_lo == 0.0) & (d_hi == 0.0)
            mislocal_tally += np.where(idle, vol_step, 0.0)

            log_eta = _log_eta(gap, state.y)
            eta = np.exp(log_eta)
            bad = (eta < eta_lo) | (eta > eta_hi)
            spread_violations += int(bad.sum())
            gap_here = np.maximum(1.0 - eps - eta, eta - 1.0)
            max_spread_gap = max(max_spread_gap, float(gap_here.max()))

            t_ratio = state.phi0_sign * np.exp(
                state.log_phi + state.log_rel + log_eta - state.log_phi0_abs
            )
            pi_tilde = t_ratio / (1.0 + t_ratio)
            max_excess = max(max_excess, float(pi_tilde.max()) - pi_cap)

            if traced:
                trace_rows.append((
                    (k + 1) * dt,
                    float(state.y[ti]),
                    float(price[ti]),
                    float(price[ti] * eta[ti]),
                    float(np.exp(state.log_phi[ti])),
                    float(state.phi0_sign * np.exp(state.log_phi0_abs[ti])),
                    float(state.lower_push[ti]),
                    float(state.upper_push[ti]),
                ))

            if (k + 1) % _BLOWUP_CHECK_STRIDE == 0 and not np.all(np.isfinite(state.y)):
                raise NumericalBlowup(f"non-finite state at step {k + 1}")

        if not (
            np.all(np.isfinite(sht_tally))
            and np.all(np.isfinite(wet_tally))
            and np.all(np.isfinite(state.log_phi))
        ):
            raise NumericalBlowup("non-finite tallies at horizon")

        sht_parts.append(sht_tally / config.horizon_years)
        wet_parts.append(wet_tally / config.horizon_years)
        volume_parts.append(vol_tally)
        mislocal_parts.append(mislocal_tally)

        price_t = np.exp(state.log_price)
        safe_t = state.phi0_sign * np.exp(state.log_phi0_abs + r * config.horizon_years)
        wealth_t = safe_t + np.exp(state.log_phi) * (1.0 - eps) * price_t
        if np.any(wealth_t <= 0.0):
            raise NonpositiveWealth("terminal liquidation wealth is nonpositive")
        log_wealth_parts.append(np.log(wealth_t))

    per_sht = np.concatenate(sht_parts)
    per_wet = np.concatenate(wet_parts)

    def mean_se(x: np.ndarray) -> tuple[float, float]:
        mean = float(np.mean(x))
        if len(x) < 2:
            return mean, math.inf
        se = float(np.std(x, ddof=1) / math.sqrt(len(x)))
        return mean, se

    sht_mean, sht_se = mean_se(per_sht)
    wet_mean, wet_se = mean_se(per_wet)
    total_volume = float(np.concatenate(volume_parts).sum())
    mislocal_volume = float(np.concatenate(mislocal_parts).sum())
    mislocal = mislocal_volume / total_volume if total_volume > 0.0 else 0.0

    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "y", "price", "shadow_price", "phi", "phi0",
                            "lower_push", "upper_push"])
            writer.writerows(trace_rows)

    return SimulationResult(
        empirical_sht=sht_mean,
        empirical_sht_se=sht_se,
        empirical_wet=wet_mean,
        empirical_wet_se=wet_se,
        spread_violations=spread_violations,
        max_spread_gap=max_spread_gap,
        mislocalized_trade_fraction=mislocal,
        max_shadow_weight_excess=max_excess,
        terminal_log_wealth_mean=float(np.mean(np.concatenate(log_wealth_parts))),
        per_path_sht=per_sht,
        per_path_wet=per_wet,
        n_paths=n_paths,
        n_steps=n_steps,
    )
