"""Command-line front end: solves, sweeps, simulations, and case studies.

Every command accepts parameters from flags or a JSON file (flags win),
echoes all of them into the output header so a run can be reproduced from
its own artifact, and writes CSV or JSON to stdout or a file.  Exit codes:
0 on success, 2 for invalid input, 3 for solver failures, 4 when a
simulation run fails its own integrity audit.
"""

from __future__ import annotations

import json
import math
import sys
from io import StringIO

import click
import numpy as np

from . import __version__
from .analytics import asymptotics, friction_analytics
from .applications import (
    BrokerOffer,
    DepositScenario,
    deposit_rate,
    evaluate_broker,
    iso_rate,
    table1,
)
from .errors import (
    EngineError,
    InvalidParameter,
    NonpositiveWealth,
    NumericalBlowup,
    SpreadViolation,
)
from .gap import solve_gap
from .model import MarketSpec
from .simulate import Endowment, SimConfig, run as run_simulation

WEIGHT_CAP_SLACK = 1e-8  # audit tolerance on the shadow weight cap


def _fail(exc: EngineError) -> None:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, InvalidParameter):
        sys.exit(2)
    if isinstance(exc, (SpreadViolation, NumericalBlowup, NonpositiveWealth)):
        sys.exit(4)
    sys.exit(3)


def _load_params(path: str | None, allowed: set[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidParameter(f"cannot read params file: {exc}")
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"params file is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise InvalidParameter("params file must contain a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise InvalidParameter(f"unknown parameter keys: {', '.join(unknown)}")
    return data


def _merge(file_params: dict, flag_params: dict) -> dict:
    merged = dict(file_params)
    merged.update({k: v for k, v in flag_params.items() if v is not None and v != ()})
    return merged


def _require(params: dict, keys: tuple[str, ...]) -> None:
    missing = [k for k in keys if k not in params]
    if missing:
        raise InvalidParameter(f"missing required parameters: {', '.join(missing)}")


def _parse_eps_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameter("--eps-grid must look like a:b:n")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidParameter("--eps-grid must hold two floats and an integer")
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0 and a < b):
        raise InvalidParameter("--eps-grid endpoints must satisfy 0 < a < b < 1")
    if n < 1:
        raise InvalidParameter("--eps-grid needs at least one point")
    return np.geomspace(a, b, n)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(rows: list[dict], fieldnames: list[str], params: dict, fmt: str, out: str | None) -> None:
    if fmt == "csv":
        buf = StringIO()
        for key in sorted(params):
            buf.write(f"# {key} = {params[key]}\n")
        buf.write(f"# version = {__version__}\n")
        buf.write(",".join(fieldnames) + "\n")
        for row in rows:
            buf.write(",".join(_format_cell(row.get(k)) for k in fieldnames) + "\n")
        text = buf.getvalue()
    else:
        payload = {"version": __version__, "params": {k: params[k] for k in sorted(params)}, "rows": rows}
        text = json.dumps(payload, indent=2) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _market_from(params: dict) -> MarketSpec:
    _require(params, ("mu", "sigma", "gamma", "epsilon", "pi_max"))
    return MarketSpec(
        mu=params["mu"],
        sigma=params["sigma"],
        r=params.get("r", 0.0),
        gamma=params["gamma"],
        epsilon=params["epsilon"],
        pi_max=params["pi_max"],
    )


def common_options(f):
    f = click.option("--params", "params_file", type=click.Path(), default=None,
                     help="JSON file with parameters; flags override it.")(f)
    f = click.option("--out", type=click.Path(), default=None, help="Output path (default stdout).")(f)
    f = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")(f)
    return f


def market_options(f):
    f = click.option("--mu", type=float, default=None, help="Excess drift of the ask price.")(f)
    f = click.option("--sigma", type=float, default=None, help="Volatility.")(f)
    f = click.option("--r", type=float, default=None, help="Safe rate (default 0).")(f)
    f = click.option("--gamma", type=float, default=None, help="Relative risk aversion.")(f)
    f = click.option("--epsilon", type=float, default=None, help="Relative bid-ask spread.")(f)
    f = click.option("--pi-max", type=float, default=None, help="Risky-weight cap.")(f)
    return f


@click.group()
@click.version_option(version=__version__, prog_name="capport")
def main() -> None:
    """Constrained portfolio choice with proportional transaction costs."""


_MARKET_KEYS = {"mu", "sigma", "r", "gamma", "epsilon", "pi_max"}


@main.command()
@common_options
@market_options
def solve(params_file, out, fmt, mu, sigma, r, gamma, epsilon, pi_max) -> None:
    """Solve the gap and report every closed-form quantity."""
    try:
        params = _merge(
            _load_params(params_file, _MARKET_KEYS),
            {"mu": mu, "sigma": sigma, "r": r, "gamma": gamma, "epsilon": epsilon, "pi_max": pi_max},
        )
        spec = _market_from(params)
        gap = solve_gap(spec)
        fa = friction_analytics(spec, gap)
        asym = asymptotics(spec)
    except EngineError as exc:
        _fail(exc)
    row = {
        "lam": gap.lam,
        "pi_minus": gap.pi_minus,
        "pi_plus": gap.pi_plus,
        "beta": gap.beta,
        "log_ul": gap.log_ul,
        "case": gap.case_tag.value,
        "mismatch_at_root": gap.mismatch_at_root,
        "iterations": gap.iterations,
        "esr": fa.esr,
        "esr_frictionless_constrained": fa.esr_frictionless_constrained,
        "lip": fa.lip,
        "lip_c": fa.lip_c,
        "lip_t_exact": fa.lip_t_exact,
        "lip_t_leading": fa.lip_t_leading,
        "sht": fa.sht,
        "wet": fa.wet,
        "lambda_leading": asym.lambda_leading,
        "esr_leading": asym.esr_leading,
        "lip_leading": asym.lip_leading,
        "pi_minus_leading": asym.pi_minus_leading,
        "sht_leading": asym.sht_leading,
        "wet_leading": asym.wet_leading,
    }
    _emit([row], list(row), params, fmt, out)


@main.command()
@common_options
@click.option("--mu", type=float, default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--r", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--eps-grid", type=str, default=None, help="Log-spaced spread grid a:b:n.")
@click.option("--pi-max", "pi_max_values", type=float, multiple=True,
              help="Risky-weight cap; repeat for several curves.")
def sweep(params_file, out, fmt, mu, sigma, r, gamma, eps_grid, pi_max_values) -> None:
    """Tabulate exact and leading-order quantities over a spread grid."""
    allowed = {"mu", "sigma", "r", "gamma", "eps_grid", "pi_max"}
    try:
        params = _merge(
            _load_params(params_file, allowed),
            {"mu": mu, "sigma": sigma, "r": r, "gamma": gamma, "eps_grid": eps_grid,
             "pi_max": list(pi_max_values) or None},
        )
        _require(params, ("mu", "sigma", "gamma", "eps_grid", "pi_max"))
        grid = _parse_eps_grid(params["eps_grid"])
        caps = params["pi_max"]
        if not isinstance(caps, (list, tuple)):
            caps = [caps]
        if not caps:
            raise InvalidParameter("at least one --pi-max is required")
    except EngineError as exc:
        _fail(exc)

    fieldnames = [
        "epsilon", "pi_max", "status", "case", "lam", "lam_leading", "width",
        "sht", "sht_leading", "wet", "wet_leading", "lip", "lip_leading",
        "lip_t", "lip_t_leading", "esr", "esr_leading",
    ]
    rows = []
    for eps in grid:
        for cap in caps:
            row = {"epsilon": float(eps), "pi_max": float(cap)}
            try:
                spec = MarketSpec(mu=params["mu"], sigma=params["sigma"], r=params.get("r", 0.0),
                                  gamma=params["gamma"], epsilon=float(eps), pi_max=float(cap))
                gap = solve_gap(spec)
                fa = friction_analytics(spec, gap)
                asym = asymptotics(spec)
            except EngineError as exc:
                row["status"] = f"error:{type(exc).__name__}"
                rows.append(row)
                continue
            row.update({
                "status": "ok",
                "case": gap.case_tag.value,
                "lam": gap.lam,
                "lam_leading": asym.lambda_leading,
                "width": gap.pi_plus - gap.pi_minus,
                "sht": fa.sht,
                "sht_leading": asym.sht_leading,
                "wet": fa.wet,
                "wet_leading": asym.wet_leading,
                "lip": fa.lip,
                "lip_leading": asym.lip_leading,
                "lip_t": fa.lip_t_exact,
                "lip_t_leading": fa.lip_t_leading,
                "esr": fa.esr,
                "esr_leading": asym.esr_leading,
            })
            rows.append(row)
    _emit(rows, fieldnames, params, fmt, out)


@main.command()
@common_options
@market_options
@click.option("--horizon", type=float, default=None, help="Horizon in years.")
@click.option("--dt", type=float, default=None, help="Euler step in years.")
@click.option("--paths", type=int, default=None, help="Number of simulated paths.")
@click.option("--seed", type=int, default=None, help="Seed of the path ensemble.")
@click.option("--safe-units", type=float, default=None, help="Initial safe units (default 1).")
@click.option("--risky-shares", type=float, default=None, help="Initial risky shares (default 0).")
@click.option("--stock-price", type=float, default=None, help="Entry stock price (default 1).")
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write a per-step CSV trace of one path here.")
def simulate(params_file, out, fmt, mu, sigma, r, gamma, epsilon, pi_max,
             horizon, dt, paths, seed, safe_units, risky_shares, stock_price, trace_path) -> None:
    """Simulate the reflected policy and compare with the closed forms."""
    allowed = _MARKET_KEYS | {"horizon", "dt", "paths", "seed",
                              "safe_units", "risky_shares", "stock_price"}
    try:
        params = _merge(
            _load_params(params_file, allowed),
            {"mu": mu, "sigma": sigma, "r": r, "gamma": gamma, "epsilon": epsilon,
             "pi_max": pi_max, "horizon": horizon, "dt": dt, "paths": paths, "seed": seed,
             "safe_units": safe_units, "risky_shares": risky_shares, "stock_price": stock_price},
        )
        _require(params, ("mu", "sigma", "gamma", "epsilon", "pi_max", "horizon", "dt", "paths", "seed"))
        spec = _market_from(params)
        gap = solve_gap(spec)
        fa = friction_analytics(spec, gap)
        endow = Endowment(
            safe_units=params.get("safe_units", 1.0),
            risky_shares=params.get("risky_shares", 0.0),
            stock_price=params.get("stock_price", 1.0),
        )
        config = SimConfig(
            horizon_years=params["horizon"],
            dt=params["dt"],
            n_paths=params["paths"],
            seed=params["seed"],
            initial_endowment=endow,
        )
        result = run_simulation(spec, gap, config, trace_path=trace_path)
    except EngineError as exc:
        _fail(exc)
    row = {
        "empirical_sht": result.empirical_sht,
        "empirical_sht_se": result.empirical_sht_se,
        "closed_form_sht": fa.sht,
        "empirical_wet": result.empirical_wet,
        "empirical_wet_se": result.empirical_wet_se,
        "closed_form_wet": fa.wet,
        "spread_violations": result.spread_violations,
        "max_spread_gap": result.max_spread_gap,
        "mislocalized_trade_fraction": result.mislocalized_trade_fraction,
        "max_shadow_weight_excess": result.max_shadow_weight_excess,
        "terminal_log_wealth_mean": result.terminal_log_wealth_mean,
        "n_paths": result.n_paths,
        "n_steps": result.n_steps,
    }
    _emit([row], list(row), params, fmt, out)
    if (
        result.spread_violations > 0
        or result.mislocalized_trade_fraction > 0.0
        or result.max_shadow_weight_excess > WEIGHT_CAP_SLACK
    ):
        click.echo("error: simulation integrity audit failed", err=True)
        sys.exit(4)


@main.command()
@common_options
@click.option("--lending-rate", type=float, default=None)
@click.option("--pi-max", type=float, default=None, help="Leverage cap of the offer.")
@click.option("--mu-bar", type=float, default=None, help="Total drift of the risky asset.")
@click.option("--sigma", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--esr-target", type=float, default=None,
              help="Also report the frictionless iso-utility rate for this target.")
def broker(params_file, out, fmt, lending_rate, pi_max, mu_bar, sigma, gamma, epsilon, esr_target) -> None:
    """Evaluate a lending-rate / leverage-cap offer under costs."""
    allowed = {"lending_rate", "pi_max", "mu_bar", "sigma", "gamma", "epsilon", "esr_target"}
    try:
        params = _merge(
            _load_params(params_file, allowed),
            {"lending_rate": lending_rate, "pi_max": pi_max, "mu_bar": mu_bar,
             "sigma": sigma, "gamma": gamma, "epsilon": epsilon, "esr_target": esr_target},
        )
        _require(params, ("lending_rate", "pi_max", "mu_bar", "sigma", "gamma", "epsilon"))
        offer = BrokerOffer(
            lending_rate=params["lending_rate"],
            leverage_cap=params["pi_max"],
            mu_bar=params["mu_bar"],
            sigma=params["sigma"],
            gamma=params["gamma"],
            epsilon=params["epsilon"],
        )
        ev = evaluate_broker(offer)
        iso = (
            iso_rate(params["esr_target"], params["pi_max"], params["mu_bar"],
                     params["gamma"], params["sigma"])
            if "esr_target" in params else None
        )
    except EngineError as exc:
        _fail(exc)
    row = {
        "esr": ev.esr,
        "esr_frictionless": ev.esr_frictionless,
        "esr_leading": ev.esr_leading,
        "lam": ev.gap.lam if ev.gap is not None else None,
        "iso_rate_for_target": iso,
    }
    _emit([row], list(row), params, fmt, out)


@main.command()
@common_options
@click.option("--pi-max-old", type=float, default=None)
@click.option("--r-old", type=float, default=None)
@click.option("--pi-max-new", type=float, default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--mu-bar", type=float, default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--gamma", type=float, default=None)
def deposit(params_file, out, fmt, pi_max_old, r_old, pi_max_new, epsilon, mu_bar, sigma, gamma) -> None:
    """Re-price the deposit rate after a leverage-cap cut."""
    allowed = {"pi_max_old", "r_old", "pi_max_new", "epsilon", "mu_bar", "sigma", "gamma"}
    try:
        params = _merge(
            _load_params(params_file, allowed),
            {"pi_max_old": pi_max_old, "r_old": r_old, "pi_max_new": pi_max_new,
             "epsilon": epsilon, "mu_bar": mu_bar, "sigma": sigma, "gamma": gamma},
        )
        _require(params, tuple(sorted(allowed)))
        scenario = DepositScenario(
            pi_max_old=params["pi_max_old"],
            r_old=params["r_old"],
            pi_max_new=params["pi_max_new"],
            epsilon=params["epsilon"],
            mu_bar=params["mu_bar"],
            sigma=params["sigma"],
            gamma=params["gamma"],
        )
        r_new = deposit_rate(scenario)
    except EngineError as exc:
        _fail(exc)
    row = {"r_new": r_new, "pi_max_new": params["pi_max_new"], "epsilon": params["epsilon"]}
    _emit([row], list(row), params, fmt, out)


@main.command(name="table1")
@common_options
@click.option("--mu-bar", type=float, default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--esr-target", type=float, default=None)
def table1_cmd(params_file, out, fmt, mu_bar, sigma, gamma, esr_target) -> None:
    """Reproduce the deposit-rate benchmark table with deviations."""
    allowed = {"mu_bar", "sigma", "gamma", "esr_target"}
    try:
        params = _merge(
            _load_params(params_file, allowed),
            {"mu_bar": mu_bar, "sigma": sigma, "gamma": gamma, "esr_target": esr_target},
        )
        rows_data = table1(
            mu_bar=params.get("mu_bar", 0.08),
            sigma=params.get("sigma", 0.16),
            gamma=params.get("gamma", 0.1),
            esr_target=params.get("esr_target", 0.10),
        )
    except EngineError as exc:
        _fail(exc)
    rows = []
    for tr in rows_data:
        rows.append({
            "pi_max": tr.pi_max,
            "epsilon": tr.epsilon,
            "r": tr.r,
            "esr": tr.esr,
            "r_pct": f"{100.0 * tr.r:.2f}",
            "esr_pct": f"{100.0 * tr.esr:.2f}",
            "benchmark_r_pct": f"{100.0 * tr.benchmark_r:.2f}",
            "benchmark_esr_pct": f"{100.0 * tr.benchmark_esr:.2f}",
            "r_deviation_pp": tr.r_deviation_pp,
            "esr_deviation_pp": tr.esr_deviation_pp,
        })
    fieldnames = list(rows[0])
    _emit(rows, fieldnames, params, fmt, out)


if __name__ == "__main__":
    main()
