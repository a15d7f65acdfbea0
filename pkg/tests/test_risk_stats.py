import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

import oracles
import reference_tables as ref
from glidepath.extremal_strategies import NEG_INF, SweepPoint, bond_closed_form_moments, profile_sweep
from glidepath.market_model import MarketState, get_preset
from glidepath.portfolio_distribution import LogNormalSummary
from glidepath.risk_stats import (
    RiskStats,
    equity_multiplier,
    lognormal_stats,
    multiplier_from_portfolio,
    norm_cdf,
    profile_csv,
    stats_csv,
    stats_table,
)

MOD = get_preset("rates-moderate").rates
ST = MarketState(0.0, 0.045)


def test_norm_cdf_tails():
    assert norm_cdf(0.0) == 0.5
    assert norm_cdf(-10.0) == pytest.approx(7.61985302416047e-24, rel=1e-12)
    assert norm_cdf(5.0) + norm_cdf(-5.0) == pytest.approx(1.0, abs=1e-16)


def test_published_examples():
    s = lognormal_stats(0.345, 0.8308)
    assert s.rounded() == pytest.approx((1.412, 0.339, 0.374, 0.127), abs=1.5e-3)
    assert lognormal_stats(0.9, 0.92940).prob_loss == pytest.approx(0.166, abs=5e-4)
    assert lognormal_stats(0.2, 0.0) == RiskStats(math.exp(0.2), 0.0, 0.0, 0.0)
    d = lognormal_stats(-0.1, 0.0)
    assert d.prob_loss == 1.0 and d.exp_loss == pytest.approx(1 - math.exp(-0.1))
    with pytest.raises(ValueError):
        lognormal_stats(0.0, -0.1)


@settings(max_examples=200, deadline=None)
@given(mu=hst.floats(-3.0, 3.0), sigma=hst.floats(1e-3, 3.0))
def test_decomposition_identity(mu, sigma):
    s = lognormal_stats(mu, sigma)
    assert s.exp_loss == s.cond_loss * s.prob_loss
    assert 0.0 <= s.prob_loss <= 1.0
    assert 0.0 <= s.cond_loss <= 1.0
    assert s.median > 0


@pytest.mark.parametrize("mu,sigma", [(0.345, 0.8308), (-0.4, 0.3), (1.5, 2.0), (0.01, 0.05)])
def test_against_scipy_oracle(mu, sigma):
    s = lognormal_stats(mu, sigma)
    median, p, cond, el = oracles.lognormal_stats(mu, sigma)
    assert s.median == pytest.approx(median, rel=1e-14)
    assert s.prob_loss == pytest.approx(p, abs=1e-12)
    assert s.exp_loss == pytest.approx(el, abs=1e-10)
    assert s.cond_loss == pytest.approx(cond, abs=1e-9)


def test_against_sampling():
    rng = np.random.default_rng(2024)
    n = 1_000_000
    for _ in range(50):
        mu, sigma = rng.uniform(-1.0, 1.0), rng.uniform(0.05, 1.5)
        m = np.exp(mu + sigma * rng.standard_normal(n))
        s = lognormal_stats(mu, sigma)
        loss = m < 1.0
        short = np.where(loss, 1.0 - m, 0.0)
        p_hat, el_hat = loss.mean(), short.mean()
        assert abs(p_hat - s.prob_loss) <= 4 * math.sqrt(s.prob_loss * (1 - s.prob_loss) / n)
        assert abs(el_hat - s.exp_loss) <= 4 * short.std(ddof=1) / math.sqrt(n)


def test_multiplier_examples():
    T = 20.0
    hedge = multiplier_from_portfolio(MOD, ST, T, bond_closed_form_moments(MOD, ST, T, NEG_INF))
    assert hedge.which == "Y"
    assert hedge.summary.mu == pytest.approx(0.0, abs=1e-14)
    assert hedge.stats().median == pytest.approx(1.0, abs=1e-14)
    tangency = multiplier_from_portfolio(MOD, ST, T, bond_closed_form_moments(MOD, ST, T, 0.0))
    assert tangency.summary.mu == pytest.approx(0.345, abs=5e-4)
    assert math.exp(tangency.summary.mu) == pytest.approx(1.412, abs=5e-4)
    z = equity_multiplier(LogNormalSummary(0.9, 0.8637772631642))
    assert z.which == "Z" and z.stats().median == pytest.approx(2.460, abs=5e-4)


@pytest.mark.parametrize("nu", [-10.0, -1.0, -0.25, 0.0, 3.0])
def test_rate_multiplier_independent_of_r0(nu):
    T = 30.0
    base = None
    for r0 in (-0.02, 0.0, 0.02, 0.06):
        st = MarketState(r0, 0.0)
        y = multiplier_from_portfolio(MOD, st, T, bond_closed_form_moments(MOD, st, T, nu)).summary
        if base is None:
            base = y
        assert y.mu == pytest.approx(base.mu, abs=1e-12)
        assert y.sigma2 == base.sigma2


def test_stats_table_examples():
    low = get_preset("rates-low")
    cell = stats_table(low, low.state, [10], [-10.0])[0]
    assert cell.stats.median == pytest.approx(1.004, abs=5e-4)
    assert cell.stats.prob_loss == pytest.approx(0.393, abs=5e-4)
    eq = get_preset("equity-moderate")
    assert stats_table(eq, eq.state, [30], [0.0])[0].stats.median == pytest.approx(3.857, abs=5e-4)
    high = get_preset("equity-high")
    assert stats_table(high, high.state, [20], [0.0])[0].stats.prob_loss == pytest.approx(0.068, abs=5e-4)


def test_table_five_subset():
    cells = stats_table(MOD, ST, [10, 20, 30, 40], [-1.0, -0.25, 0.0])
    for c in cells:
        col = ref.NUS.index(c.nu)
        for key in ref.STAT_KEYS:
            assert getattr(c.stats, key) == pytest.approx(float(ref.RATES_MODERATE[int(c.T)][key][col]), abs=2e-3)


def test_stats_table_rejects():
    with pytest.raises(ValueError):
        stats_table(MOD, ST, [0.0], [0.0])
    both = get_preset("rates-moderate")
    both = type(both)("both", both.rates, get_preset("equity-moderate").equity, both.state)
    with pytest.raises(ValueError):
        stats_table(both, ST, [10], [0.0])


def test_singular_cells_are_marked():
    cells = stats_table(MOD, ST, [10], [0.5])
    assert cells[0].stats is None and cells[0].note.startswith("singular")
    line = stats_csv(cells).splitlines()[1]
    assert line.startswith("10,0.5,,,,,,,,,singular")


def test_stats_csv_schema():
    text = stats_csv(stats_table(MOD, ST, [20], [0.0]))
    header, row = text.splitlines()
    assert header == (
        "T,nu,median,prob_loss,cond_loss,exp_loss,median_full,prob_loss_full,cond_loss_full,exp_loss_full,note"
    )
    fields = row.split(",")
    assert fields[:6] == ["20", "0.0", "1.412", "0.339", "0.374", "0.127"]
    assert float(fields[6]) == pytest.approx(1.412, abs=5e-4)


def test_profile_csv():
    assert profile_csv([]) == "sigma,mu,nu\n"
    pt = SweepPoint(NEG_INF, LogNormalSummary(0.25, 0.0))
    assert profile_csv([pt]).splitlines()[1] == "0,0.25,-inf"
    assert profile_csv([SweepPoint(0.5, None, "singular")]) == "sigma,mu,nu\n"


def test_profile_csv_ordering_for_equity_sweep():
    ep = get_preset("equity-moderate").equity
    nus = [0.5 * (1 - 1 / u) for u in np.linspace(0.0, 1.9, 200)[1:]] + [NEG_INF]
    rows = profile_csv(profile_sweep(ep, ST, 20.0, nus)).splitlines()[1:]
    parsed = [tuple(map(float, r.split(","))) for r in rows]
    nu_col = [p[2] for p in parsed]
    assert nu_col == sorted(nu_col)
    mus = np.array([p[1] for p in parsed])
    peak = nu_col.index(0.0) if 0.0 in nu_col else int(np.argmax(mus))
    assert int(np.argmax(mus)) == peak
    assert np.all(np.diff(mus[: peak + 1]) > 0)
    assert np.all(np.diff(mus[peak:]) < 0)
