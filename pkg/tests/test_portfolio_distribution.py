import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

import oracles
from glidepath.exppoly import ExpPoly
from glidepath.market_model import (
    EquityParams,
    MarketState,
    RateParams,
    get_preset,
    lambda_r_const,
    psi,
    upsilon,
    zcb_price,
)
from glidepath.portfolio_distribution import (
    JointExposure,
    LogNormalSummary,
    horizon_moments_equity_only,
    horizon_moments_general,
    horizon_moments_rates_only,
    joint,
    rates_variance_closed,
    weight_h_r,
    weight_h_S,
    xi,
)
from glidepath.strategies import ClosedFormStrategy, ConstantStrategy, SampledStrategy, psi_exppoly, zero_strategy

MOD = get_preset("rates-moderate").rates
EQ = get_preset("equity-moderate").equity
ST = MarketState(0.0, 0.045)


def hedge(rp, T):
    return ClosedFormStrategy(T, psi_exppoly(T, rp.kappa, -rp.sigma_r))


def wavy(T):
    e = ExpPoly.constant(T, 0.2) + ExpPoly.sine(T, 0.1, 0.4) + ExpPoly.exponential(T, 0.15, -0.05)
    return ClosedFormStrategy(T, e)


# ---------------------------------------------------------------------------
# summaries


def test_summary_validation_and_csv():
    with pytest.raises(ValueError):
        LogNormalSummary(0.0, -1e-3)
    s = LogNormalSummary(0.5, 0.25)
    assert s.sigma == 0.5
    assert LogNormalSummary.csv_header() == "mu,sigma2,sigma"
    assert s.csv_row() == "0.5,0.25,0.5"


def test_joint_requires_matching_horizons():
    with pytest.raises(ValueError):
        JointExposure(zero_strategy(10.0), zero_strategy(11.0))
    with pytest.raises(ValueError):
        joint(None, None)
    j = joint(None, ConstantStrategy(5.0, 1.0))
    assert j.rate_strategy(2.0) == 0.0 and j.T == 5.0


# ---------------------------------------------------------------------------
# effective weights


def test_h_r_initial_volatility():
    assert weight_h_r(MOD, zero_strategy(20.0), 0.0) == pytest.approx(0.007 * psi(0.08, 20.0), rel=1e-14)
    assert weight_h_r(MOD, zero_strategy(20.0), 0.0) == pytest.approx(0.0698, abs=5e-5)


def test_h_r_at_horizon_is_exposure():
    assert weight_h_r(MOD, ConstantStrategy(20.0, 0.4), 20.0) == pytest.approx(0.4, abs=1e-15)


@pytest.mark.parametrize("method", ["analytic", "quadrature"])
def test_h_r_no_indirect_term_when_a_equals_kappa(method):
    f = wavy(15.0)
    u = np.linspace(0, 15, 7)
    got = weight_h_r(MOD, f, u, method=method)
    expected = [MOD.sigma_r * psi(MOD.kappa, 15 - x) + f(x) for x in u]
    assert got == pytest.approx(expected, abs=1e-12)


def test_h_r_general_slope_matches_oracle():
    rp = RateParams(kappa=0.08, r_bar=0.02, sigma_r=0.007, a=0.2, b=0.03)
    f = wavy(12.0)
    for u in (0.0, 3.3, 12.0):
        tail = oracles._quad(lambda s: f(s) * math.exp(-rp.kappa * (s - u)), u, 12.0)
        ref = rp.sigma_r * oracles.psi(rp.kappa, 12.0 - u) + f(u) + (rp.a - rp.kappa) * tail
        assert weight_h_r(rp, f, u) == pytest.approx(ref, abs=1e-12)
        assert weight_h_r(rp, f, u, method="quadrature") == pytest.approx(ref, abs=1e-10)


def test_h_S_constant_profile():
    T, c = 20.0, 0.3
    for u in np.linspace(0, T, 9):
        ref = c * (1 - EQ.feedback * psi(EQ.alpha, T - u))
        assert weight_h_S(EQ, ConstantStrategy(T, c), u) == pytest.approx(ref, rel=1e-13)
        assert weight_h_S(EQ, ConstantStrategy(T, c), u, method="quadrature") == pytest.approx(ref, rel=1e-10)


def test_h_S_without_feedback_and_at_horizon():
    ep = EquityParams(0.045, 0.15, 0.0, 0.06)
    f = wavy(10.0)
    u = np.linspace(0, 10, 5)
    assert np.array_equal(weight_h_S(ep, f, u), f(u))
    assert weight_h_S(EQ, f, 10.0) == pytest.approx(f(10.0), abs=1e-15)


def test_weights_reject_out_of_range_times():
    with pytest.raises(ValueError):
        weight_h_S(EQ, ConstantStrategy(5.0, 1.0), 5.5)
    with pytest.raises(ValueError):
        weight_h_r(MOD, ConstantStrategy(5.0, 1.0), -0.1)


def test_unknown_method():
    with pytest.raises(ValueError):
        horizon_moments_equity_only(EQ, ST, ConstantStrategy(5.0, 1.0), method="simpson")
    with pytest.raises(ValueError):
        horizon_moments_equity_only(EQ, ST, ConstantStrategy(5.0, 1.0).sample(), method="analytic")


# ---------------------------------------------------------------------------
# xi


def test_xi():
    assert xi(EQ, ST, np.linspace(0, 50, 6)) == pytest.approx(0.3, abs=1e-15)
    st = MarketState(0.0, 0.09)
    assert xi(EQ, st, 1e4) == pytest.approx(0.3, rel=1e-12)
    frozen = EquityParams(0.045, 0.15, 0.007, 0.0)
    assert xi(frozen, st, 40.0) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        xi(EQ, ST, -1.0)


# ---------------------------------------------------------------------------
# moments


def test_rates_only_examples():
    T = 20.0
    cash = horizon_moments_rates_only(MOD, MarketState(MOD.r_bar, 0.0), zero_strategy(T))
    assert cash.mu == pytest.approx(T * MOD.r_bar, rel=1e-14)
    assert cash.sigma2 == pytest.approx(rates_variance_closed(MOD, T), rel=1e-12)
    assert cash.sigma2 == pytest.approx(MOD.sigma_r**2 * upsilon(MOD.kappa, T), rel=1e-14)

    h = horizon_moments_rates_only(MOD, ST, hedge(MOD, T))
    assert h.sigma2 == pytest.approx(0.0, abs=1e-15)
    assert math.exp(h.mu) == pytest.approx(1.0 / zcb_price(MOD, ST.r0, T), rel=1e-12)

    lam = lambda_r_const(MOD)
    tangency = horizon_moments_rates_only(MOD, ST, ConstantStrategy(T, lam))
    assert tangency.sigma2 == pytest.approx(0.6902, abs=5e-5)


def test_equity_only_examples():
    z = horizon_moments_equity_only(EQ, ST, zero_strategy(20.0))
    assert (z.mu, z.sigma2) == (0.0, 0.0)
    s = horizon_moments_equity_only(EQ, ST, ConstantStrategy(20.0, 0.3))
    assert s.mu == pytest.approx(0.9, rel=1e-14)
    ref = oracles.equity_moments(EQ, ST, lambda _: 0.3, 20.0)[1]
    assert s.sigma2 == pytest.approx(ref, rel=1e-10)
    assert s.sigma2 == pytest.approx(0.8637772631642, rel=1e-11)
    assert 0.5 * math.erfc(s.mu / s.sigma / math.sqrt(2)) == pytest.approx(0.166, abs=5e-4)


def test_stock_index_log_mean():
    # a unit stock holding with constant rates: mu = T (r_bar + x_bar) - sigma_S^2 T / 2
    rp = RateParams(kappa=0.08, r_bar=0.02, sigma_r=1e-12, a=0.08, b=0.02)
    ep = EquityParams(0.045, 0.15, 0.0, 0.06)
    st = MarketState(0.02, 0.045)
    T = 17.0
    m = horizon_moments_general(rp, ep, st, joint(None, ConstantStrategy(T, ep.sigma_S)))
    assert m.mu == pytest.approx(T * (0.065) - 0.5 * 0.15**2 * T, rel=1e-12)
    assert m.sigma2 == pytest.approx(0.15**2 * T, rel=1e-12)


def test_general_cash_example():
    ep = EquityParams(0.045, 0.15, 0.007, 0.06, rho=0.0)
    m = horizon_moments_general(MOD, ep, MarketState(MOD.r_bar, 0.045), joint(zero_strategy(30.0), None))
    assert m.mu == pytest.approx(30.0 * MOD.r_bar, rel=1e-14)
    assert m.sigma2 == pytest.approx(MOD.sigma_r**2 * upsilon(MOD.kappa, 30.0), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    T=hst.floats(1.0, 40.0),
    cr=hst.floats(-1.0, 1.0),
    cs=hst.floats(-1.0, 1.0),
    amp=hst.floats(-0.5, 0.5),
    r0=hst.floats(-0.02, 0.06),
    x0=hst.floats(0.0, 0.09),
)
def test_additivity_without_correlation(T, cr, cs, amp, r0, x0):
    st = MarketState(r0, x0)
    fr = ClosedFormStrategy(T, ExpPoly.constant(T, cr) + ExpPoly.exponential(T, amp, -0.1))
    fs = ClosedFormStrategy(T, ExpPoly.constant(T, cs) + ExpPoly.sine(T, amp, 0.3))
    g = horizon_moments_general(MOD, EQ, st, joint(fr, fs))
    r = horizon_moments_rates_only(MOD, st, fr)
    e = horizon_moments_equity_only(EQ, st, fs)
    assert g.mu == pytest.approx(r.mu + e.mu, abs=1e-10)
    assert g.sigma2 == pytest.approx(r.sigma2 + e.sigma2, abs=1e-10)


def test_correlation_enters_variance_and_mean():
    T = 10.0
    ep = EquityParams(0.045, 0.15, 0.007, 0.06, rho=0.4)
    j = joint(ConstantStrategy(T, 0.2), ConstantStrategy(T, 0.3))
    g = horizon_moments_general(MOD, ep, ST, j)
    r = horizon_moments_rates_only(MOD, ST, j.rate_strategy)
    e = horizon_moments_equity_only(ep, ST, j.equity_strategy)
    assert g.mu == pytest.approx(r.mu + e.mu - 0.4 * 0.2 * 0.3 * T, rel=1e-12)
    # cross term 2 rho int h_r h_S, checked by quadrature on the weights
    hr = lambda u: weight_h_r(MOD, j.rate_strategy, u)
    hs = lambda u: weight_h_S(ep, j.equity_strategy, u)
    cross = 2 * 0.4 * oracles._quad(lambda u: hr(u) * hs(u), 0.0, T)
    assert g.sigma2 == pytest.approx(r.sigma2 + e.sigma2 + cross, rel=1e-10)
    assert horizon_moments_general(MOD, ep, ST, j, method="quadrature").sigma2 == pytest.approx(g.sigma2, rel=1e-8)


STRATS = {
    "constant": lambda T: ConstantStrategy(T, 0.3),
    "wavy": wavy,
    "hedge": lambda T: hedge(MOD, T),
}


@pytest.mark.parametrize("name", sorted(STRATS))
@pytest.mark.parametrize("T", [5.0, 20.0, 60.0])
def test_methods_agree(name, T):
    f = STRATS[name](T)
    for fn, params in ((horizon_moments_equity_only, EQ), (horizon_moments_rates_only, MOD)):
        a = fn(params, ST, f, method="analytic")
        for method in ("grid", "quadrature"):
            b = fn(params, ST, f, method=method)
            assert b.mu == pytest.approx(a.mu, rel=1e-8, abs=1e-12)
            assert b.sigma2 == pytest.approx(a.sigma2, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("T", [3.0, 25.0])
def test_equity_matches_oracle(T):
    ep = EquityParams(0.045, 0.15, 0.015, 0.06)
    st = MarketState(0.0, 0.07)
    f = wavy(T)
    mu, s2 = oracles.equity_moments(ep, st, f, T)
    m = horizon_moments_equity_only(ep, st, f)
    assert m.mu == pytest.approx(mu, rel=1e-10)
    assert m.sigma2 == pytest.approx(s2, rel=1e-9)


@pytest.mark.parametrize("a", [0.08, 0.0, 0.2])
def test_rates_general_slope_matches_oracle(a):
    rp = RateParams(kappa=0.08, r_bar=0.02, sigma_r=0.007, a=a, b=0.03)
    st = MarketState(0.01, 0.045)
    T = 14.0
    f = wavy(T)
    mu, s2 = oracles.rates_moments(rp, st, f, T)
    ep = EquityParams(0.045, 0.15, 0.007, 0.06)
    m = horizon_moments_general(rp, ep, st, joint(f, None))
    assert m.mu == pytest.approx(mu, rel=1e-10)
    assert m.sigma2 == pytest.approx(s2, rel=1e-9)
    g = horizon_moments_general(rp, ep, st, joint(f.sample(), None))
    assert g.mu == pytest.approx(mu, rel=1e-6)
    assert g.sigma2 == pytest.approx(s2, rel=1e-6)


def test_sampled_strategy_close_to_closed_form():
    T = 20.0
    f = wavy(T)
    a = horizon_moments_equity_only(EQ, ST, f)
    b = horizon_moments_equity_only(EQ, ST, f.sample())
    assert b.mu == pytest.approx(a.mu, abs=1e-6)
    assert b.sigma2 == pytest.approx(a.sigma2, abs=1e-6)


def test_variance_zero_only_for_hedge():
    T = 20.0
    assert horizon_moments_rates_only(MOD, ST, hedge(MOD, T)).sigma2 < 1e-15
    nudged = ClosedFormStrategy(T, psi_exppoly(T, MOD.kappa, -MOD.sigma_r) + ExpPoly.constant(T, 1e-3))
    assert horizon_moments_rates_only(MOD, ST, nudged).sigma2 > 0


def test_global_equity_maximum():
    rng = np.random.default_rng(11)
    T = 20.0
    st = MarketState(0.0, 0.08)
    X = ExpPoly.constant(T, EQ.x_bar / EQ.sigma_S) + ExpPoly.exponential(T, (st.x0 - EQ.x_bar) / EQ.sigma_S, -EQ.alpha)
    best = horizon_moments_equity_only(EQ, st, ClosedFormStrategy(T, X)).mu
    assert best == pytest.approx(0.5 * (X * X).integral(), rel=1e-13)
    assert best == pytest.approx(0.5 * oracles._quad(lambda s: oracles.xi(EQ, st, s) ** 2, 0, T), rel=1e-11)
    grid = np.linspace(0, T, 201)
    for _ in range(100):
        bump = rng.normal(scale=0.2, size=grid.size).cumsum() / 10
        f = SampledStrategy(T, X(grid) + bump)
        assert horizon_moments_equity_only(EQ, st, f, method="grid").mu <= best + 1e-12
