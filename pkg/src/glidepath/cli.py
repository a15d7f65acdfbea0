"""Command-line front end; every subcommand writes CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .extremal_strategies import (
    NEG_INF,
    SingularNuError,
    bond_extremal,
    bond_nu_for_variance,
    classify_solution_type,
    coefficients_csv,
    equity_extremal,
    equity_nu_for_variance,
    format_nu,
    glidepath_csv,
    parse_nu,
    profile_sweep,
)
from .market_model import (
    ConfigError,
    ParameterSet,
    asymptotic_excess_vol,
    excess_vol_profile,
    get_preset,
    load_config,
    zero_yield,
)
from .monte_carlo import SimConfig, compare_to_analytic, simulate_terminal
from .portfolio_distribution import horizon_moments_equity_only, horizon_moments_rates_only, joint
from .quadrature import QuadratureError
from .risk_stats import profile_csv, stats_csv, stats_table
from .strategies import ConstantStrategy, SampledStrategy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULT_R0_VALUES = (-0.02, 0.0, 0.02, 0.04, 0.06)
DEFAULT_VOL_PRESETS = tuple(f"mr-{i}" for i in range(1, 8))
DEFAULT_VOL_TIMES = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0, 100000.0)


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _nus(text: str) -> list[float]:
    try:
        return [parse_nu(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(vals: Sequence[float], what: str) -> None:
    if any(not (v > 0) or math.isnan(v) for v in vals):
        raise ConfigError(f"{what} must be positive")


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _source(args) -> ParameterSet:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if not args.preset and not args.config:
        raise ConfigError("a parameter source is required (--preset or --config)")
    ps = get_preset(args.preset) if args.preset else load_config(args.config)
    if getattr(args, "r0", None) is not None or getattr(args, "x0", None) is not None:
        ps = ps.with_state(r0=args.r0, x0=args.x0)
    return ps


def _leg(ps: ParameterSet, leg: Optional[str]) -> str:
    if leg is None:
        if ps.rates is not None and ps.equity is not None:
            raise ConfigError("parameter set has both legs; choose one with --leg")
        return "rates" if ps.rates is not None else "equity"
    if leg == "rates" and ps.rates is None:
        raise ConfigError(f"{ps.name} has no rate parameters")
    if leg == "equity" and ps.equity is None:
        raise ConfigError(f"{ps.name} has no equity parameters")
    return leg


def _writer():
    buf = io.StringIO()
    return buf, csv.writer(buf, lineterminator="\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_yield_curve(args) -> str:
    ps = _source(args)
    if ps.rates is None:
        raise ConfigError(f"{ps.name} has no rate parameters")
    mats = args.maturities or [float(m) for m in range(0, 31)]
    if any(m < 0 for m in mats):
        raise ConfigError("maturities must be non-negative")
    r0s = args.r0_values or list(DEFAULT_R0_VALUES)
    buf, w = _writer()
    w.writerow(["maturity_years", *(f"yield_r0={r:g}" for r in r0s)])
    for m in mats:
        w.writerow([f"{m:g}", *(_num(zero_yield(ps.rates, r, m)) for r in r0s)])
    return buf.getvalue()


def cmd_vol_profile(args) -> str:
    if args.preset or args.config:
        sets = [_source(args)]
    else:
        sets = [get_preset(n) for n in (args.presets or DEFAULT_VOL_PRESETS)]
    for ps in sets:
        if ps.equity is None:
            raise ConfigError(f"{ps.name} has no equity parameters")
    times = args.times or list(DEFAULT_VOL_TIMES)
    _positive(times, "times")
    buf, w = _writer()
    w.writerow(["t_years", *(f"vol_{ps.name}" for ps in sets)])
    for t in times:
        w.writerow([f"{t:g}", *(_num(excess_vol_profile(ps.equity, t)) for ps in sets)])
    # limit row; a diverging profile shows as inf
    w.writerow(["inf", *(_num(asymptotic_excess_vol(ps.equity)) for ps in sets)])
    return buf.getvalue()


def _nu_grid(args) -> list[float]:
    if args.nu:
        return list(args.nu)
    lo, hi, n = args.nu_min, args.nu_max, args.n
    if n < 2 or not lo < hi:
        raise ConfigError("need --nu-min < --nu-max and --n >= 2")
    return [float(v) for v in np.linspace(lo, hi, n) if v != 0.5]


def cmd_profile(args) -> str:
    ps = _source(args)
    _positive([args.T], "T")
    if ps.rates is not None and ps.equity is not None and args.leg is None:
        params = (ps.rates, ps.equity)
    else:
        params = ps.rates if _leg(ps, args.leg) == "rates" else ps.equity
    return profile_csv(profile_sweep(params, ps.state, args.T, _nu_grid(args)))


def _single_nu(args, ps: ParameterSet, leg: str) -> float:
    if (args.nu is None) == (args.sigma is None):
        raise ConfigError("give exactly one of --nu and --sigma")
    if args.nu is not None:
        if len(args.nu) != 1:
            raise ConfigError("a single --nu value is required")
        return args.nu[0]
    if args.sigma < 0:
        raise ConfigError("--sigma must be non-negative")
    if leg == "rates":
        return bond_nu_for_variance(ps.rates, args.T, args.sigma**2)[0]
    return equity_nu_for_variance(ps.equity, ps.state, args.T, args.sigma**2)


def cmd_strategy(args) -> str:
    ps = _source(args)
    _positive([args.T], "T")
    leg = _leg(ps, args.leg)
    nu = _single_nu(args, ps, leg)
    if leg == "rates":
        return glidepath_csv(bond_extremal(ps.rates, args.T, nu).strategy(), None, args.points)
    sol = equity_extremal(ps.equity, ps.state, args.T, nu)
    if args.coefficients:
        return coefficients_csv([sol])
    return glidepath_csv(sol.strategy(), ps.equity.sigma_S, args.points)


def cmd_stats(args) -> str:
    ps = _source(args)
    horizons = args.T_list
    _positive(horizons, "horizons")
    leg = _leg(ps, args.leg)
    params = ps.rates if leg == "rates" else ps.equity
    nus = args.nu or [NEG_INF, -10.0, -2.0, -1.0, -0.5, -0.25, -1 / 16, 0.0]
    cells = stats_table(params, ps.state, horizons, nus)
    bad = [c for c in cells if c.stats is None]
    if bad and args.strict:
        raise SingularNuError(f"singular nu {format_nu(bad[0].nu)} at T={bad[0].T:g}")
    return stats_csv(cells)


def cmd_simulate(args) -> str:
    ps = _source(args)
    _positive([args.T], "T")
    leg = _leg(ps, args.leg)
    T = args.T
    if args.strategy_csv:
        strat = SampledStrategy.load(args.strategy_csv)
        if abs(strat.T - T) > 1e-9 * max(1.0, T):
            raise ConfigError(f"strategy horizon {strat.T} differs from --T {T}")
    elif args.constant is not None:
        strat = ConstantStrategy(T, args.constant)
    else:
        nu = _single_nu(args, ps, leg)
        if leg == "rates":
            strat = bond_extremal(ps.rates, T, nu).strategy()
        else:
            strat = equity_extremal(ps.equity, ps.state, T, nu).strategy()
    cfg = SimConfig(args.paths, args.steps, args.seed, args.antithetic)
    if leg == "rates":
        analytic = horizon_moments_rates_only(ps.rates, ps.state, strat)
        res = simulate_terminal(ps.rates, None, ps.state, joint(strat, None), cfg, dump_path=args.dump)
    else:
        # equity runs report the excess return over the money market
        analytic = horizon_moments_equity_only(ps.equity, ps.state, strat)
        res = simulate_terminal(None, ps.equity, ps.state, joint(None, strat), cfg, excess_only=True, dump_path=args.dump)
    z_mu, z_s2 = compare_to_analytic(res, analytic)
    buf, w = _writer()
    w.writerow(["quantity", "analytic", "sample", "std_error", "z_score"])
    w.writerow(["log_mean", _num(analytic.mu), _num(res.sample_mu), _num(res.se_mu), _num(z_mu)])
    w.writerow(["log_variance", _num(analytic.sigma2), _num(res.sample_sigma2), _num(res.se_sigma2), _num(z_s2)])
    return buf.getvalue()


def cmd_classify(args) -> str:
    ps = _source(args)
    if ps.equity is None:
        raise ConfigError(f"{ps.name} has no equity parameters")
    nus = args.nu or [-10.0, -1.0, 0.0, 0.25, 1.0, 10.0]
    buf, w = _writer()
    w.writerow(["nu", "type"])
    for nu in nus:
        try:
            kind = classify_solution_type(ps.equity, nu)
        except ValueError as exc:
            kind = f"undefined ({exc})"
        w.writerow([format_nu(nu), kind])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# parser


def _add_source(p: argparse.ArgumentParser, state: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", help="named parameter set")
    src.add_argument("--config", help="key=value parameter file")
    if state:
        p.add_argument("--r0", type=float, help="initial short rate")
        p.add_argument("--x0", type=float, help="initial equity premium")
    p.add_argument("-o", "--output", help="write CSV here instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgParser(prog="glidepath", description="Deterministic mean-variance glidepaths under mean-reverting returns.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    p = sub.add_parser("yield-curve", help="zero-coupon yields by maturity and initial short rate")
    _add_source(p, state=False)
    p.add_argument("--maturities", type=_floats, help="comma-separated maturities in years")
    p.add_argument("--r0-values", type=_floats, help="comma-separated initial short rates")
    p.set_defaults(func=cmd_yield_curve)

    p = sub.add_parser("vol-profile", help="annualised volatility of log excess stock returns")
    _add_source(p, state=False)
    p.add_argument("--presets", type=lambda s: [t.strip() for t in s.split(",") if t.strip()])
    p.add_argument("--times", type=_floats, help="comma-separated horizons in years")
    p.set_defaults(func=cmd_vol_profile)

    def nu_args(p, single: bool):
        p.add_argument("--nu", type=_nus, help="multiplier(s); accepts -inf and fractions")
        if single:
            p.add_argument("--sigma", type=float, help="target log-volatility instead of --nu")
        p.add_argument("--leg", choices=("rates", "equity"))

    p = sub.add_parser("profile", help="(sigma, mu) sweep over multipliers")
    _add_source(p)
    p.add_argument("--T", type=float, required=True)
    nu_args(p, False)
    p.add_argument("--nu-min", type=float, default=-10.0)
    p.add_argument("--nu-max", type=float, default=0.0)
    p.add_argument("--n", type=int, default=101)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("strategy", help="extremal glidepath")
    _add_source(p)
    p.add_argument("--T", type=float, required=True)
    nu_args(p, True)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--coefficients", action="store_true", help="print the closed-form coefficients instead")
    p.set_defaults(func=cmd_strategy)

    p = sub.add_parser("stats", help="risk statistics table")
    _add_source(p)
    p.add_argument("--T", dest="T_list", type=_floats, required=True, help="comma-separated horizons")
    nu_args(p, False)
    p.add_argument("--strict", action="store_true", help="fail on singular multipliers")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("simulate", help="Monte Carlo check of the analytic moments")
    _add_source(p)
    p.add_argument("--T", type=float, required=True)
    nu_args(p, True)
    p.add_argument("--constant", type=float, help="constant exposure instead of an extremal")
    p.add_argument("--strategy-csv", help="sampled strategy file with header s,exposure")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--steps", type=int, default=100, help="steps per year")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--dump", help="write path_id,log_VT samples here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="solution type of the equity extremal per multiplier")
    _add_source(p)
    p.add_argument("--nu", type=_nus)
    p.set_defaults(func=cmd_classify)
    return parser


# options whose values may start with "-" (negative lists, "-inf")
_SIGNED_OPTIONS = {"--nu", "--r0", "--x0", "--r0-values", "--maturities", "--nu-min", "--nu-max", "--constant", "--sigma"}


def _join_signed(argv: Sequence[str]) -> list[str]:
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _SIGNED_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_join_signed(argv))
        if args.command == "simulate" and (args.constant is not None or args.strategy_csv):
            if args.nu is not None or args.sigma is not None:
                raise ConfigError("--constant/--strategy-csv cannot be combined with --nu/--sigma")
        out = args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularNuError, QuadratureError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(out)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
