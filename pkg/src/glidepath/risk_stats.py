"""Risk and reward statistics of log-normal wealth multipliers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .extremal_strategies import (
    SingularNuError,
    SweepPoint,
    bond_closed_form_moments,
    equity_extremal,
    equity_moments,
    format_nu,
)
from .market_model import EquityParams, MarketState, ParameterSet, RateParams, zcb_price
from .portfolio_distribution import LogNormalSummary


def norm_cdf(x: float) -> float:
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class RiskStats:
    """Median, loss probability, expected loss given a loss, and unconditional expected loss."""

    median: float
    prob_loss: float
    cond_loss: float
    exp_loss: float

    def rounded(self, digits: int = 3) -> tuple[float, float, float, float]:
        return tuple(round(v, digits) for v in (self.median, self.prob_loss, self.cond_loss, self.exp_loss))


def lognormal_stats(mu: float, sigma: float) -> RiskStats:
    """Statistics of ``M = exp(N(mu, sigma^2))`` relative to the break-even level one.

    ``prob_loss = P(M < 1)``, ``exp_loss = E[(1 - M)^+]`` and
    ``cond_loss = E[1 - M | M < 1]`` (zero when a loss is impossible).
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    median = math.exp(mu)
    if sigma == 0:
        if mu < 0:
            loss = 1.0 - median
            return RiskStats(median, 1.0, loss, loss)
        return RiskStats(median, 0.0, 0.0, 0.0)
    d = -mu / sigma
    prob = norm_cdf(d)
    exp_loss = prob - math.exp(mu + 0.5 * sigma * sigma) * norm_cdf(d - sigma)
    exp_loss = max(exp_loss, 0.0)
    cond = exp_loss / prob if prob > 0 else 0.0
    # keep exp_loss == cond * prob as an exact identity of the returned numbers
    return RiskStats(median, prob, cond, cond * prob)


@dataclass(frozen=True)
class MultiplierContext:
    """Log summary of a wealth multiplier; ``which`` is ``"Y"`` (rates) or ``"Z"`` (equity)."""

    which: str
    summary: LogNormalSummary

    def stats(self) -> RiskStats:
        return lognormal_stats(self.summary.mu, self.summary.sigma)


def multiplier_from_portfolio(rp: RateParams, st: MarketState, T: float, summary: LogNormalSummary) -> MultiplierContext:
    """Rate multiplier ``Y_T = V_T p_0(T) / V_0``; removes the dependence on ``r0``."""
    return MultiplierContext("Y", summary.shifted(math.log(zcb_price(rp, st.r0, T))))


def equity_multiplier(summary: LogNormalSummary) -> MultiplierContext:
    return MultiplierContext("Z", summary)


@dataclass(frozen=True)
class StatsCell:
    T: float
    nu: float
    stats: Optional[RiskStats]
    note: str = ""


def stats_table(params, st: MarketState, horizons: Sequence[float], nus: Sequence[float]) -> list[StatsCell]:
    """Statistics of the extremal multiplier for every ``(T, nu)`` pair.

    ``params`` is :class:`RateParams` (multiplier ``Y``), :class:`EquityParams`
    (multiplier ``Z``) or a :class:`ParameterSet` holding exactly one of them.
    """
    if isinstance(params, ParameterSet):
        if (params.rates is None) == (params.equity is None):
            raise ValueError("statistics tables need exactly one of rate or equity parameters")
        params = params.rates or params.equity
    out = []
    for T in horizons:
        if T <= 0:
            raise ValueError("horizons must be positive")
        for nu in nus:
            try:
                if isinstance(params, RateParams):
                    ctx = multiplier_from_portfolio(params, st, T, bond_closed_form_moments(params, st, T, nu))
                elif isinstance(params, EquityParams):
                    ctx = equity_multiplier(equity_moments(equity_extremal(params, st, T, nu)))
                else:
                    raise TypeError(f"unsupported parameter type {type(params).__name__}")
                out.append(StatsCell(float(T), float(nu), ctx.stats()))
            except (SingularNuError, ValueError) as exc:
                out.append(StatsCell(float(T), float(nu), None, f"singular: {exc}"))
    return out


_STAT_FIELDS = ("median", "prob_loss", "cond_loss", "exp_loss")


def stats_csv(cells: Sequence[StatsCell]) -> str:
    """CSV with 3-decimal statistics followed by full-precision copies."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["T", "nu", *_STAT_FIELDS, *(f"{k}_full" for k in _STAT_FIELDS), "note"])
    for c in cells:
        if c.stats is None:
            w.writerow([f"{c.T:g}", format_nu(c.nu), *[""] * 8, c.note])
            continue
        vals = [getattr(c.stats, k) for k in _STAT_FIELDS]
        w.writerow([f"{c.T:g}", format_nu(c.nu), *(f"{v:.3f}" for v in vals), *(repr(float(v)) for v in vals), ""])
    return buf.getvalue()


def profile_csv(points: Sequence[SweepPoint]) -> str:
    """CSV ``sigma,mu,nu`` sorted by ``nu``; singular points are dropped."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sigma", "mu", "nu"])
    for p in sorted((p for p in points if p.summary is not None), key=lambda p: p.nu):
        w.writerow([_num(p.summary.sigma), _num(p.summary.mu), format_nu(p.nu)])
    return buf.getvalue()


def _num(x: float) -> str:
    return "0" if x == 0 else repr(float(x))
