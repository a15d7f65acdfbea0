"""Log-normal horizon distribution of a portfolio run with deterministic exposures.

For exposures ``f^r`` (rate factor) and ``f^S`` (equity factor) the log return
``log(V_T/V_0)`` is Gaussian with mean ``mu`` and variance ``sigma2`` built
from the effective weights

    h^r_u = sigma_r psi(kappa, T-u) + f^r_u + (a - kappa) int_u^T f^r_s e^{-kappa(s-u)} ds
    h^S_u = f^S_u - (sigma_x/sigma_S) int_u^T f^S_s e^{-alpha(s-u)} ds

Three evaluation back ends are available through ``method``:

* ``"analytic"``: exact exponential-polynomial algebra (closed-form strategies);
* ``"grid"``: composite Gauss-Legendre on the strategy grid (sampled strategies);
* ``"quadrature"``: nested adaptive quadrature, used as an independent check.

``"auto"`` picks analytic when every strategy has a closed form, else grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exppoly import ExpPoly
from .market_model import EquityParams, MarketState, RateParams, lambda_r_const, psi, upsilon
from .quadrature import gauss_legendre_panels, integrate_scalar
from .strategies import SampledStrategy, Strategy, psi_exppoly, zero_strategy

_GL_ORDER = 5
_DEFAULT_CELLS = 2000


@dataclass(frozen=True)
class LogNormalSummary:
    """Mean and variance of a Gaussian log return."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if not math.isfinite(self.mu) or not math.isfinite(self.sigma2):
            raise ValueError("summary must be finite")
        if self.sigma2 < 0:
            if self.sigma2 < -1e-12 * max(1.0, abs(self.mu)):
                raise ValueError(f"negative variance {self.sigma2}")
            object.__setattr__(self, "sigma2", 0.0)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def __add__(self, other: "LogNormalSummary") -> "LogNormalSummary":
        return LogNormalSummary(self.mu + other.mu, self.sigma2 + other.sigma2)

    def shifted(self, dmu: float) -> "LogNormalSummary":
        return LogNormalSummary(self.mu + dmu, self.sigma2)

    @staticmethod
    def csv_header() -> str:
        return "mu,sigma2,sigma"

    def csv_row(self) -> str:
        return f"{self.mu!r},{self.sigma2!r},{self.sigma!r}"


@dataclass(frozen=True)
class JointExposure:
    rate_strategy: Strategy
    equity_strategy: Strategy

    def __post_init__(self):
        if abs(self.rate_strategy.T - self.equity_strategy.T) > 1e-12 * max(1.0, self.rate_strategy.T):
            raise ValueError("rate and equity strategies must share the horizon")

    @property
    def T(self) -> float:
        return self.rate_strategy.T


# ---------------------------------------------------------------------------
# Expected market price of equity risk


def xi(ep: EquityParams, st: MarketState, s):
    """Expected market price of equity risk at time ``s``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("s must be non-negative")
    out = (ep.x_bar + np.exp(-ep.alpha * s_arr) * (st.x0 - ep.x_bar)) / ep.sigma_S
    return float(out) if out.ndim == 0 else out


def xi_exppoly(ep: EquityParams, st: MarketState, T: float) -> ExpPoly:
    return ExpPoly.constant(T, ep.x_bar / ep.sigma_S) + ExpPoly.exponential(
        T, (st.x0 - ep.x_bar) / ep.sigma_S, -ep.alpha
    )


# ---------------------------------------------------------------------------
# helpers


def _resolve(method: str, strategies) -> str:
    if method not in ("auto", "analytic", "grid", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        return "analytic" if all(f.as_exppoly() is not None for f in strategies) else "grid"
    if method == "analytic" and any(f.as_exppoly() is None for f in strategies):
        raise ValueError("analytic evaluation needs closed-form strategies")
    return method


def _tail_quad(f: Strategy, rate: float, u: float) -> float:
    T = f.T
    if u >= T:
        return 0.0
    pts = f.grid if isinstance(f, SampledStrategy) else None
    return integrate_scalar(lambda s: f(s) * math.exp(-rate * (s - u)), u, T, points=pts)


def _as_array_fn(fn: Callable[[float], float]) -> Callable:
    def wrapped(u):
        u_arr = np.asarray(u, dtype=float)
        out = np.array([fn(float(x)) for x in np.atleast_1d(u_arr)])
        return float(out[0]) if u_arr.ndim == 0 else out

    return wrapped


def _check_u(T: float, u) -> None:
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0) or np.any(u_arr > T * (1 + 1e-12)):
        raise ValueError(f"u must lie in [0, {T}]")


# ---------------------------------------------------------------------------
# effective weights


def h_r_exppoly(rp: RateParams, f_r: ExpPoly) -> ExpPoly:
    T = f_r.span
    out = psi_exppoly(T, rp.kappa, rp.sigma_r) + f_r
    if rp.a != rp.kappa:
        out = out + f_r.tail_discounted(rp.kappa) * (rp.a - rp.kappa)
    return out


def h_S_exppoly(ep: EquityParams, f_S: ExpPoly) -> ExpPoly:
    if ep.sigma_x == 0:
        return f_S.copy()
    return f_S - f_S.tail_discounted(ep.alpha) * ep.feedback


def weight_h_r(rp: RateParams, f_r: Strategy, u, method: str = "auto"):
    """Effective rate weight ``h^r_u`` (direct plus indirect effect)."""
    _check_u(f_r.T, u)
    method = _resolve(method, [f_r])
    if method == "analytic":
        return h_r_exppoly(rp, f_r.as_exppoly())(u)
    T = f_r.T

    def one(x: float) -> float:
        val = rp.sigma_r * psi(rp.kappa, T - x) + f_r(x)
        if rp.a != rp.kappa:
            val += (rp.a - rp.kappa) * _tail_quad(f_r, rp.kappa, x)
        return val

    return _as_array_fn(one)(u)


def weight_h_S(ep: EquityParams, f_S: Strategy, u, method: str = "auto"):
    """Effective equity weight ``h^S_u`` (direct exposure minus premium feedback)."""
    _check_u(f_S.T, u)
    method = _resolve(method, [f_S])
    if method == "analytic":
        return h_S_exppoly(ep, f_S.as_exppoly())(u)

    def one(x: float) -> float:
        if ep.sigma_x == 0:
            return float(f_S(x))
        return float(f_S(x)) - ep.feedback * _tail_quad(f_S, ep.alpha, x)

    return _as_array_fn(one)(u)


# ---------------------------------------------------------------------------
# grid back end


class _Grid:
    """Composite Gauss-Legendre rule on cells matching the strategies' grids."""

    def __init__(self, T: float, strategies):
        edges = [np.linspace(0.0, T, _DEFAULT_CELLS + 1)]
        sampled = [f for f in strategies if isinstance(f, SampledStrategy)]
        if sampled:
            edges = [f.grid for f in sampled]
        self.edges = np.unique(np.concatenate(edges))
        self.edges[0], self.edges[-1] = 0.0, T
        self.nodes, self.weights = gauss_legendre_panels(self.edges, _GL_ORDER)
        x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
        self._x, self._w = x, w

    def integral(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.weights))

    def tail(self, f: Strategy, rate: float) -> np.ndarray:
        """``int_u^T f(s) exp(-rate (s-u)) ds`` at every node ``u``."""
        right = self.edges[1:]
        # integral over [u, right edge of u's cell] at each node, by a mapped GL rule
        half = 0.5 * (right[:, None] - self.nodes)
        sub = self.nodes[:, :, None] + half[:, :, None] * (self._x[None, None, :] + 1.0)
        local = np.sum(
            f(sub) * np.exp(-rate * (sub - self.nodes[:, :, None])) * self._w * half[:, :, None],
            axis=2,
        )
        # backward recurrence for the tail beyond each cell
        widths = np.diff(self.edges)
        cell = np.sum(f(self.nodes) * np.exp(-rate * (self.nodes - self.edges[:-1, None])) * self.weights, axis=1)
        decay = np.exp(-rate * widths)
        n = widths.size
        tail_edges = np.zeros(n + 1)
        for i in range(n - 1, -1, -1):
            tail_edges[i] = cell[i] + decay[i] * tail_edges[i + 1]
        return local + np.exp(-rate * (right[:, None] - self.nodes)) * tail_edges[1:, None]


# ---------------------------------------------------------------------------
# moments


def _m0(rp: RateParams, st: MarketState, T: float) -> float:
    return T * rp.r_bar + (st.r0 - rp.r_bar) * psi(rp.kappa, T)


def horizon_moments_general(
    rp: RateParams, ep: EquityParams, st: MarketState, j: JointExposure, method: str = "auto"
) -> LogNormalSummary:
    """Mean and variance of ``log(V_T/V_0)`` for a joint rate/equity exposure."""
    T = j.T
    fr, fs = j.rate_strategy, j.equity_strategy
    method = _resolve(method, [fr, fs])
    lam_a = rp.a * (rp.r_bar - rp.b) / rp.sigma_r
    lam_b = (rp.a - rp.kappa) / rp.sigma_r * (st.r0 - rp.r_bar)
    m0 = _m0(rp, st, T)

    if method == "analytic":
        Fr, Fs = fr.as_exppoly(), fs.as_exppoly()
        hr, hs = h_r_exppoly(rp, Fr), h_S_exppoly(ep, Fs)
        X = xi_exppoly(ep, st, T)
        mu = (
            m0
            + lam_a * Fr.integral()
            + (lam_b * Fr.times_exp(-rp.kappa).integral() if lam_b else 0.0)
            - 0.5 * (Fr * Fr).integral()
            + (X * Fs).integral()
            - 0.5 * (Fs * Fs).integral()
            - ep.rho * (Fr * Fs).integral()
        )
        s2 = (hr * hr).integral() + (hs * hs).integral()
        if ep.rho:
            s2 += 2.0 * ep.rho * (hr * hs).integral()
        return LogNormalSummary(mu, s2)

    if method == "grid":
        g = _Grid(T, [fr, fs])
        u = g.nodes
        a_r, a_s = fr(u), fs(u)
        hr = rp.sigma_r * (-np.expm1(-rp.kappa * (T - u)) / rp.kappa if rp.kappa else (T - u)) + a_r
        if rp.a != rp.kappa:
            hr = hr + (rp.a - rp.kappa) * g.tail(fr, rp.kappa)
        hs = a_s - ep.feedback * g.tail(fs, ep.alpha) if ep.sigma_x else a_s
        mu = m0 + g.integral(
            lam_a * a_r
            + lam_b * np.exp(-rp.kappa * u) * a_r
            - 0.5 * a_r**2
            + xi(ep, st, u) * a_s
            - 0.5 * a_s**2
            - ep.rho * a_r * a_s
        )
        s2 = g.integral(hr**2 + hs**2 + 2.0 * ep.rho * hr * hs)
        return LogNormalSummary(mu, s2)

    # nested adaptive quadrature
    pts = None
    for f in (fr, fs):
        if isinstance(f, SampledStrategy):
            pts = f.grid

    def hr_fn(x):
        return weight_h_r(rp, fr, x, method="quadrature")

    def hs_fn(x):
        return weight_h_S(ep, fs, x, method="quadrature")

    mu = m0 + integrate_scalar(
        lambda s: lam_a * fr(s)
        + lam_b * math.exp(-rp.kappa * s) * fr(s)
        - 0.5 * fr(s) ** 2
        + xi(ep, st, s) * fs(s)
        - 0.5 * fs(s) ** 2
        - ep.rho * fr(s) * fs(s),
        0.0,
        T,
        points=pts,
    )
    s2 = integrate_scalar(
        lambda x: hr_fn(x) ** 2 + hs_fn(x) ** 2 + 2.0 * ep.rho * hr_fn(x) * hs_fn(x),
        0.0,
        T,
        points=pts,
    )
    return LogNormalSummary(mu, s2)


def horizon_moments_rates_only(
    rp: RateParams, st: MarketState, f_r: Strategy, method: str = "auto"
) -> LogNormalSummary:
    """Moments for a pure rate strategy; requires a constant price of rate risk."""
    lam = lambda_r_const(rp)
    T = f_r.T
    method = _resolve(method, [f_r])
    m0 = _m0(rp, st, T)
    if method == "analytic":
        F = f_r.as_exppoly()
        h = psi_exppoly(T, rp.kappa, rp.sigma_r) + F
        return LogNormalSummary(m0 + lam * F.integral() - 0.5 * (F * F).integral(), (h * h).integral())
    if method == "grid":
        g = _Grid(T, [f_r])
        u = g.nodes
        fv = f_r(u)
        gv = rp.sigma_r * np.array([psi(rp.kappa, T - x) for x in u.ravel()]).reshape(u.shape)
        return LogNormalSummary(m0 + g.integral(lam * fv - 0.5 * fv**2), g.integral((gv + fv) ** 2))
    pts = f_r.grid if isinstance(f_r, SampledStrategy) else None
    mu = m0 + integrate_scalar(lambda s: lam * f_r(s) - 0.5 * f_r(s) ** 2, 0.0, T, points=pts)
    s2 = integrate_scalar(lambda s: (rp.sigma_r * psi(rp.kappa, T - s) + f_r(s)) ** 2, 0.0, T, points=pts)
    return LogNormalSummary(mu, s2)


def horizon_moments_equity_only(
    ep: EquityParams, st: MarketState, f_S: Strategy, method: str = "auto"
) -> LogNormalSummary:
    """Excess-return moments due to the equity exposure alone."""
    T = f_S.T
    method = _resolve(method, [f_S])
    if method == "analytic":
        F = f_S.as_exppoly()
        h = h_S_exppoly(ep, F)
        X = xi_exppoly(ep, st, T)
        return LogNormalSummary((X * F).integral() - 0.5 * (F * F).integral(), (h * h).integral())
    if method == "grid":
        g = _Grid(T, [f_S])
        u = g.nodes
        fv = f_S(u)
        h = fv - ep.feedback * g.tail(f_S, ep.alpha) if ep.sigma_x else fv
        return LogNormalSummary(g.integral(xi(ep, st, u) * fv - 0.5 * fv**2), g.integral(h**2))
    pts = f_S.grid if isinstance(f_S, SampledStrategy) else None
    mu = integrate_scalar(lambda s: xi(ep, st, s) * f_S(s) - 0.5 * f_S(s) ** 2, 0.0, T, points=pts)
    s2 = integrate_scalar(lambda x: weight_h_S(ep, f_S, x, method="quadrature") ** 2, 0.0, T, points=pts)
    return LogNormalSummary(mu, s2)


def rates_variance_closed(rp: RateParams, T: float) -> float:
    """Variance of ``int_0^T r_s ds`` (zero exposure)."""
    return rp.sigma_r**2 * upsilon(rp.kappa, T)


def joint(rate: Optional[Strategy], equity: Optional[Strategy], T: float | None = None) -> JointExposure:
    """Build a :class:`JointExposure`, filling a missing leg with zero exposure."""
    if rate is None and equity is None:
        raise ValueError("need at least one strategy")
    T = T if T is not None else (rate or equity).T
    return JointExposure(rate or zero_strategy(T), equity or zero_strategy(T))
