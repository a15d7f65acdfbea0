"""Extremal (mean-variance stationary) bond and equity strategies.

Every extremal strategy is indexed by a Lagrange multiplier ``nu``: ``nu < 1/2``
gives maximising strategies (``nu = 0`` is the unconstrained mean maximum and
``nu -> -inf`` the zero-variance limit), ``nu > 1/2`` minimising or locally
extremal ones. ``nu`` is a plain float; ``-math.inf`` and ``math.inf`` encode
the two limits.

Equity extremals solve ``A f'' + C f + D = 0`` with

    A = 1 - 2 nu,  C = 2 nu (alpha - sigma_x/sigma_S)^2 - alpha^2,  D = alpha^2 x_bar / sigma_S,

plus two boundary conditions, giving an exponential (type I), trigonometric
(type II) or quadratic (type III) glidepath.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .exppoly import ExpPoly
from .market_model import (
    EquityParams,
    MarketState,
    RateParams,
    lambda_r_const,
    psi,
    theta,
    upsilon,
)
from .portfolio_distribution import (
    LogNormalSummary,
    _Grid,
    h_S_exppoly,
    horizon_moments_equity_only,
    xi_exppoly,
)
from .strategies import (
    ClosedFormStrategy,
    ConstantStrategy,
    SampledStrategy,
    Strategy,
    psi_exppoly,
)

NEG_INF = -math.inf
POS_INF = math.inf

_TYPE_III_REL = 1e-12
_SINGULAR_REL = 1e-14
_SPECIAL_ALPHA_REL = 1e-12
RESIDUAL_GRID = 1001


class SingularNuError(ArithmeticError):
    """The multiplier has no extremal strategy (degenerate boundary system)."""


def parse_nu(token: Union[str, float]) -> float:
    """Parse ``-inf``, ``inf``, decimals or fractions such as ``-1/16``."""
    if isinstance(token, (int, float)):
        val = float(token)
    else:
        t = token.strip().lower()
        if t in ("-inf", "-infinity", "neginf"):
            return NEG_INF
        if t in ("inf", "+inf", "infinity", "posinf"):
            return POS_INF
        try:
            val = float(Fraction(t)) if "/" in t else float(t)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse nu from {token!r}") from None
    if math.isnan(val):
        raise ValueError("nu must not be NaN")
    return val


def format_nu(nu: float) -> str:
    if nu == NEG_INF:
        return "-inf"
    if nu == POS_INF:
        return "inf"
    return repr(float(nu))


def _reject_half(nu: float) -> None:
    if nu == 0.5:
        raise ValueError("nu = 1/2 has no extremal strategy")


# ---------------------------------------------------------------------------
# Bonds


@dataclass(frozen=True)
class BondExtremalSolution:
    """Extremal rate strategy ``f = (lambda + 2 nu g) / (1 - 2 nu)`` with ``g = sigma_r psi(kappa, T-s)``."""

    nu: float
    lambda_r: float
    rp: RateParams
    T: float

    @property
    def weights(self) -> tuple[float, float]:
        """Coefficients ``(p, q)`` with ``f = p * lambda_r + q * g``."""
        if math.isinf(self.nu):
            return 0.0, -1.0
        A = 1.0 - 2.0 * self.nu
        return 1.0 / A, 2.0 * self.nu / A

    @property
    def hedge_weight(self) -> float:
        """Share held in the horizon-matched zero-coupon bond."""
        return -self.weights[1]

    def expr(self) -> ExpPoly:
        p, q = self.weights
        return psi_exppoly(self.T, self.rp.kappa, q * self.rp.sigma_r) + p * self.lambda_r

    def strategy(self) -> ClosedFormStrategy:
        return ClosedFormStrategy(self.T, self.expr(), label=f"bond nu={format_nu(self.nu)}")


def bond_extremal(rp: RateParams, T: float, nu: float) -> BondExtremalSolution:
    _reject_half(nu)
    lam = lambda_r_const(rp)
    if T <= 0:
        raise ValueError("T must be positive")
    return BondExtremalSolution(float(nu), lam, rp, float(T))


def _bond_base_variance(rp: RateParams, T: float) -> float:
    lam = lambda_r_const(rp)
    spread = rp.r_bar - rp.b
    return T * (lam**2 + 2.0 * spread) - 2.0 * psi(rp.kappa, T) * spread + rp.sigma_r**2 * upsilon(rp.kappa, T)


def bond_closed_form_moments(rp: RateParams, st: MarketState, T: float, nu: float) -> LogNormalSummary:
    """Closed-form log-mean and log-variance of the extremal bond strategy."""
    _reject_half(nu)
    lam = lambda_r_const(rp)
    # u = 1/(1-2nu); 2nu/(1-2nu) = u - 1; both limits nu -> +-inf give u = 0
    u = 0.0 if math.isinf(nu) else 1.0 / (1.0 - 2.0 * nu)
    w = u - 1.0
    spread = rp.r_bar - rp.b
    ps = psi(rp.kappa, T)
    mu = (
        T * (rp.r_bar * u - rp.b * w + lam**2 * u - 0.5 * lam**2 * u * u - spread * u * w)
        + ps * (st.r0 - rp.r_bar * u + rp.b * w + spread * u * w)
        - 0.5 * rp.sigma_r**2 * w * w * upsilon(rp.kappa, T)
    )
    return LogNormalSummary(mu, _bond_base_variance(rp, T) * u * u)


def bond_nu_for_variance(rp: RateParams, T: float, target_sigma2: float) -> tuple[float, float]:
    """Maximising and minimising multipliers attaining ``target_sigma2``."""
    if target_sigma2 < 0:
        raise ValueError("target variance must be non-negative")
    if target_sigma2 == 0:
        return NEG_INF, POS_INF
    root = math.sqrt(_bond_base_variance(rp, T) / target_sigma2)
    return 0.5 * (1.0 - root), 0.5 * (1.0 + root)


# ---------------------------------------------------------------------------
# Equity: classification


def ode_coefficients(ep: EquityParams, nu: float) -> tuple[float, float, float]:
    R = ep.feedback
    A = 1.0 - 2.0 * nu
    C = 2.0 * nu * (ep.alpha - R) ** 2 - ep.alpha**2
    D = ep.alpha**2 * ep.x_bar / ep.sigma_S
    return A, C, D


def classify_solution_type(ep: EquityParams, nu: float) -> str:
    """Return ``"I"`` (exponential), ``"II"`` (trigonometric) or ``"III"`` (quadratic)."""
    if not math.isfinite(nu):
        raise ValueError("classification needs a finite nu")
    _reject_half(nu)
    A, C, _ = ode_coefficients(ep, nu)
    scale = max(ep.feedback**2, ep.alpha**2, 1e-300)
    if abs(C) < _TYPE_III_REL * scale:
        return "III"
    return "I" if (A > 0) != (C > 0) else "II"


# ---------------------------------------------------------------------------
# Equity: construction


@dataclass(frozen=True)
class EquityExtremalSolution:
    """Closed-form extremal equity glidepath.

    ``form`` is ``"I"``, ``"II"``, ``"III"``, ``"xi"`` (the ``nu = 0`` maximum)
    or ``"zero"`` (the ``nu = -inf`` limit). For type I the coefficient ``b1``
    multiplies ``exp(c1 (s - T))`` so that it stays bounded for large ``c1 T``.
    """

    nu: float
    form: str
    b0: float
    b1: float
    b2: float
    c1: float
    c2: float
    ep: EquityParams
    st: MarketState
    T: float
    method: str = "closed-form"

    @property
    def solution_type(self) -> str:
        if self.form in ("xi", "zero"):
            return "I"
        return self.form

    def expr(self) -> ExpPoly:
        T = self.T
        if self.form == "zero":
            return ExpPoly.constant(T, 0.0)
        if self.form == "xi":
            return xi_exppoly(self.ep, self.st, T)
        if self.form == "I":
            return (
                ExpPoly.constant(T, self.b0)
                + ExpPoly.exponential(T, self.b1, self.c1, anchor=T)
                + ExpPoly.exponential(T, self.b2, self.c2)
            )
        if self.form == "II":
            return (
                ExpPoly.constant(T, self.b0)
                + ExpPoly.sine(T, self.b1, self.c1)
                + ExpPoly.cosine(T, self.b2, self.c1)
            )
        return ExpPoly.polynomial(T, [self.b0, self.b1, self.b2])

    def strategy(self) -> ClosedFormStrategy:
        return ClosedFormStrategy(self.T, self.expr(), label=f"equity nu={format_nu(self.nu)} type {self.form}")

    def coefficient_record(self) -> dict:
        return {
            "type": self.solution_type,
            "nu": format_nu(self.nu),
            "b0": self.b0,
            "b1": self.b1,
            "b2": self.b2,
            "c1": self.c1,
            "c2": self.c2,
        }


def _solve2(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """2x2 solve by elimination with partial pivoting; flags near-singular systems."""
    M = np.array(M, dtype=float)
    rhs = np.array(rhs, dtype=float)
    scale = np.max(np.abs(M), axis=1)
    if np.any(scale == 0) or not np.all(np.isfinite(M)) or not np.all(np.isfinite(rhs)):
        raise SingularNuError("degenerate boundary system")
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) <= _SINGULAR_REL * scale[0] * scale[1]:
        raise SingularNuError(f"boundary system is singular (relative determinant {abs(det) / (scale[0] * scale[1]):.2e})")
    if abs(M[1, 0]) > abs(M[0, 0]):
        M = M[::-1]
        rhs = rhs[::-1]
    m = M[1, 0] / M[0, 0]
    x1 = (rhs[1] - m * rhs[0]) / (M[1, 1] - m * M[0, 1])
    x0 = (rhs[0] - M[0, 1] * x1) / M[0, 0]
    return np.array([x0, x1])


def _type_one(ep: EquityParams, st: MarketState, T: float, nu: float, A: float, C: float, D: float):
    al, R = ep.alpha, ep.feedback
    c1 = math.sqrt(-C / A)
    c2 = -c1
    b0 = -D / C
    den = al**2 - 2.0 * nu * (al - R) ** 2
    # first column rescaled by exp(-c1 T): unknowns are b1 e^{c1 T} and b2
    M = [
        [1.0 / (c1 - al), math.exp(c2 * T) / (c2 - al)],
        [R / (c1 + al - R) * math.exp(-c1 * T), R / (c2 + al - R)],
    ]
    rhs = [
        al * ep.x_bar / (ep.sigma_S * den),
        -st.x0 / ep.sigma_S + al * ep.x_bar / ep.sigma_S * (al - 2.0 * nu * (al - R)) / den,
    ]
    b1, b2 = _solve2(np.array(M), np.array(rhs))
    return b0, b1, b2, c1, c2


def _special_alpha(ep: EquityParams, st: MarketState, T: float, nu: float):
    al = ep.alpha
    A = 1.0 - 2.0 * nu
    den = 2.0 * nu * math.exp(-2.0 * al * T) - 1.0
    if abs(den) < _SINGULAR_REL:
        raise SingularNuError("special-case denominator vanishes")
    b0 = ep.x_bar / (ep.sigma_S * A)
    num = -st.x0 / ep.sigma_S + ep.x_bar / ep.sigma_S * (1.0 - 4.0 * nu / A * math.expm1(-al * T))
    return b0, 0.0, num / den, al, -al


def _type_two(ep: EquityParams, st: MarketState, T: float, nu: float, A: float, C: float, D: float):
    al, R = ep.alpha, ep.feedback
    c = math.sqrt(C / A)
    b0 = -D / C
    k1, k2 = math.sin(c * T), math.cos(c * T)
    Rt = R - al
    M = [[k1 * al + k2 * c, k2 * al - k1 * c], [c, Rt]]
    rhs = [
        al * ep.x_bar / ep.sigma_S * (1.0 / A + al**2 / C),
        st.x0 / ep.sigma_x * (c**2 + Rt**2) + al * ep.x_bar / ep.sigma_S * (1.0 / A + al * Rt / C),
    ]
    b1, b2 = _solve2(np.array(M), np.array(rhs))
    return b0, b1, b2, c, -c


def _type_three(ep: EquityParams, st: MarketState, T: float, nu: float, A: float, D: float):
    al, R = ep.alpha, ep.feedback
    b2 = -D / (2.0 * A)
    Rt = R - al
    k = ep.x_bar * al / (ep.sigma_S * A)
    M = [[al, T * al + 1.0], [R, R / Rt]]
    rhs = [k * (0.5 * T**2 * al**2 + T * al + 1.0), st.x0 / ep.sigma_S * Rt + k * R / Rt]
    b0, b1 = _solve2(np.array(M), np.array(rhs))
    return b0, b1, b2, 0.0, 0.0


def _basis(form: str, T: float, c: float) -> list[ExpPoly]:
    if form == "I":
        return [ExpPoly.exponential(T, 1.0, c, anchor=T), ExpPoly.exponential(T, 1.0, -c)]
    if form == "II":
        return [ExpPoly.sine(T, 1.0, c), ExpPoly.cosine(T, 1.0, c)]
    return [ExpPoly.polynomial(T, [1.0]), ExpPoly.polynomial(T, [0.0, 1.0])]


def _boundary_solve(ep: EquityParams, st: MarketState, T: float, nu: float, form: str):
    """Fit the two free coefficients through the equivalent boundary conditions.

    A solution of the ODE satisfies the integral equation iff

        (1-2nu) (f'(T) + alpha f(T)) = alpha x_bar / sigma_S
        (1-2nu) f(0) + 2 nu R int_0^T f(t) e^{-alpha t} dt = x0 / sigma_S

    This route stays regular where the explicit formulas divide by zero
    (for example ``sigma_x = 0``).
    """
    A, C, D = ode_coefficients(ep, nu)
    al, R = ep.alpha, ep.feedback
    if form == "I":
        c = math.sqrt(-C / A)
        part = ExpPoly.constant(T, -D / C)
        coeffs = (-D / C, c, -c)
    elif form == "II":
        c = math.sqrt(C / A)
        part = ExpPoly.constant(T, -D / C)
        coeffs = (-D / C, c, -c)
    else:
        c = 0.0
        part = ExpPoly.polynomial(T, [0.0, 0.0, -D / (2.0 * A)])
        coeffs = None
    basis = _basis(form, T, c)

    def bc(fn: ExpPoly) -> tuple[float, float]:
        d = fn.derivative()
        first = A * (d(T) + al * fn(T))
        second = A * fn(0.0) + 2.0 * nu * R * fn.times_exp(-al).integral()
        return first, second

    p1, p2 = bc(part)
    M = np.array([bc(b) for b in basis]).T
    rhs = np.array([al * ep.x_bar / ep.sigma_S - p1, st.x0 / ep.sigma_S - p2])
    x, y = _solve2(M, rhs)
    if form == "III":
        return x, y, -D / (2.0 * A), 0.0, 0.0
    return coeffs[0], x, y, coeffs[1], coeffs[2]


def equity_extremal(ep: EquityParams, st: MarketState, T: float, nu: float) -> EquityExtremalSolution:
    """Extremal equity glidepath for multiplier ``nu``.

    Raises:
        ValueError: for ``nu = 1/2`` or ``nu = +inf``.
        SingularNuError: when the boundary system has no unique solution.
    """
    _reject_half(nu)
    if T <= 0:
        raise ValueError("T must be positive")
    T = float(T)
    if nu == NEG_INF:
        return EquityExtremalSolution(nu, "zero", 0.0, 0.0, 0.0, 0.0, 0.0, ep, st, T)
    if nu == POS_INF:
        raise ValueError("nu = +inf is not an equity extremal")
    if nu == 0.0:
        b = (st.x0 - ep.x_bar) / ep.sigma_S
        return EquityExtremalSolution(0.0, "xi", ep.x_bar / ep.sigma_S, 0.0, b, 0.0, -ep.alpha, ep, st, T)

    A, C, D = ode_coefficients(ep, nu)
    form = classify_solution_type(ep, nu)
    R = ep.feedback
    method = "closed-form"
    try:
        if R > 0 and abs(ep.alpha - 0.5 * R) <= _SPECIAL_ALPHA_REL * R:
            form = "I"
            coeffs = _special_alpha(ep, st, T, nu)
        elif R == 0:
            raise SingularNuError("no premium feedback")
        elif form == "I":
            coeffs = _type_one(ep, st, T, nu, A, C, D)
        elif form == "II":
            coeffs = _type_two(ep, st, T, nu, A, C, D)
        else:
            coeffs = _type_three(ep, st, T, nu, A, D)
    except (SingularNuError, ZeroDivisionError):
        coeffs = _boundary_solve(ep, st, T, nu, form)
        method = "boundary"
    b0, b1, b2, c1, c2 = (float(v) for v in coeffs)
    return EquityExtremalSolution(float(nu), form, b0, b1, b2, c1, c2, ep, st, T, method)


def equity_extremal_boundary(ep: EquityParams, st: MarketState, T: float, nu: float) -> EquityExtremalSolution:
    """Same strategy as :func:`equity_extremal`, always fitted through the boundary system."""
    _reject_half(nu)
    if not math.isfinite(nu) or nu == 0.0:
        return equity_extremal(ep, st, T, nu)
    form = classify_solution_type(ep, nu)
    b0, b1, b2, c1, c2 = (float(v) for v in _boundary_solve(ep, st, float(T), nu, form))
    return EquityExtremalSolution(float(nu), form, b0, b1, b2, c1, c2, ep, st, float(T), "boundary")


# ---------------------------------------------------------------------------
# Residuals


def integral_equation_lhs(sol: EquityExtremalSolution, f: Optional[ExpPoly] = None) -> ExpPoly:
    """Left-hand side ``xi - f + 2 nu h - 2 nu R int_0^s h_u e^{-alpha(s-u)} du`` as an expression."""
    ep, nu = sol.ep, sol.nu
    f = sol.expr() if f is None else f
    h = h_S_exppoly(ep, f)
    out = xi_exppoly(ep, sol.st, sol.T) - f + h * (2.0 * nu)
    if ep.sigma_x:
        out = out - h.head_discounted(ep.alpha) * (2.0 * nu * ep.feedback)
    return out


def residual_integral_equation(sol: EquityExtremalSolution, f: Optional[ExpPoly] = None, num: int = RESIDUAL_GRID) -> float:
    """Sup-norm of the integral-equation residual on a uniform grid."""
    if not math.isfinite(sol.nu):
        raise ValueError("residual needs a finite nu")
    return integral_equation_lhs(sol, f).max_abs(num)


def residual_ode(sol: EquityExtremalSolution, num: int = RESIDUAL_GRID) -> float:
    """Sup-norm of ``A f'' + C f + D`` on a uniform grid."""
    if not math.isfinite(sol.nu):
        raise ValueError("residual needs a finite nu")
    A, C, D = ode_coefficients(sol.ep, sol.nu)
    f = sol.expr()
    return (f.derivative(2) * A + f * C + D).max_abs(num)


# ---------------------------------------------------------------------------
# Moments and inversion


def equity_moments(sol: EquityExtremalSolution) -> LogNormalSummary:
    return horizon_moments_equity_only(sol.ep, sol.st, sol.strategy(), method="analytic")


def _nu_from_u(u: float) -> float:
    return NEG_INF if u == 0 else 0.5 * (1.0 - 1.0 / u)


def equity_nu_for_variance(
    ep: EquityParams, st: MarketState, T: float, target_sigma2: float, tol: float = 1e-12
) -> float:
    """Multiplier ``nu <= 0`` whose extremal equity strategy has variance ``target_sigma2``.

    The search runs over ``u = 1/(1 - 2 nu)`` in ``(0, 1]``.
    """
    if target_sigma2 < 0:
        raise ValueError("target variance must be non-negative")
    if target_sigma2 == 0:
        return NEG_INF
    top = equity_moments(equity_extremal(ep, st, T, 0.0)).sigma2
    if target_sigma2 > top * (1 + 1e-12):
        raise ValueError(f"target {target_sigma2} exceeds the variance {top} of the global maximum")
    if target_sigma2 >= top:
        return 0.0

    def gap(u: float) -> float:
        return equity_moments(equity_extremal(ep, st, T, _nu_from_u(u))).sigma2 - target_sigma2

    lo = 1e-3
    while gap(lo) > 0:
        lo *= 1e-3
        if lo < 1e-30:
            raise ArithmeticError("could not bracket the target variance")
    u = brentq(gap, lo, 1.0, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return _nu_from_u(u)


def constant_equity_moments(ep: EquityParams, st: MarketState, T: float, c: float) -> LogNormalSummary:
    """Moments of the constant exposure ``f = c``."""
    al = ep.alpha
    if al == 0:
        return horizon_moments_equity_only(ep, st, ConstantStrategy(T, c), method="quadrature")
    mu = c / ep.sigma_S * (T * ep.x_bar + (st.x0 - ep.x_bar) * psi(al, T)) - 0.5 * T * c * c
    if ep.sigma_x == 0:
        return LogNormalSummary(mu, c * c * T)
    at = al * ep.sigma_S / ep.sigma_x
    s2 = c * c * (
        T * ((at - 1.0) / at) ** 2
        + 2.0 * (at - 1.0) / (al * at * at) * (-math.expm1(-al * T))
        + (-math.expm1(-2.0 * al * T)) / (2.0 * al * at * at)
    )
    return LogNormalSummary(mu, s2)


def constant_equity_variance_integrals(ep: EquityParams, T: float, c: float) -> float:
    """Same variance written as ``c^2 (T - 2 R theta + R^2 upsilon)``."""
    R = ep.feedback
    return c * c * (T - 2.0 * R * theta(ep.alpha, T) + R * R * upsilon(ep.alpha, T))


# ---------------------------------------------------------------------------
# Joint strategies


def joint_pair(rp: RateParams, ep: EquityParams, st: MarketState, T: float, nu: float):
    """Bond and equity extremals at a common ``nu`` and their combined moments."""
    if ep.rho != 0:
        raise ValueError("joint pairs need independent factors (rho = 0)")
    bond = bond_extremal(rp, T, nu)
    eq_nu = NEG_INF if nu == POS_INF else nu
    eq = equity_extremal(ep, st, T, eq_nu)
    total = bond_closed_form_moments(rp, st, T, nu) + equity_moments(eq)
    return bond, eq, total


def bond_extremal_given_equity(
    rp: RateParams, ep: EquityParams, T: float, nu: float, f_S: Strategy, rho: float | None = None
) -> Strategy:
    """Extremal rate strategy when the equity leg ``f_S`` is fixed and factors correlate."""
    _reject_half(nu)
    rho = ep.rho if rho is None else rho
    lam = lambda_r_const(rp)
    if math.isinf(nu):
        p, q = 0.0, -1.0
    else:
        p, q = 1.0 / (1.0 - 2.0 * nu), 2.0 * nu / (1.0 - 2.0 * nu)
    # f^r = p lam + q g + rho (q h^S - p f^S)
    F = f_S.as_exppoly()
    if F is not None:
        expr = psi_exppoly(T, rp.kappa, q * rp.sigma_r) + p * lam
        if rho:
            expr = expr + (h_S_exppoly(ep, F) * q - F * p) * rho
        return ClosedFormStrategy(T, expr, label=f"bond given equity nu={format_nu(nu)}")
    grid = f_S.grid if isinstance(f_S, SampledStrategy) else np.linspace(0.0, T, 2001)
    g = rp.sigma_r * np.array([psi(rp.kappa, T - s) for s in grid])
    vals = p * lam + q * g
    if rho:
        fv = f_S(grid)
        hv = fv - ep.feedback * _tail_at(f_S, ep.alpha, grid) if ep.sigma_x else fv
        vals = vals + rho * (q * hv - p * fv)
    return SampledStrategy(T, vals)


def _tail_at(f: Strategy, rate: float, grid: np.ndarray) -> np.ndarray:
    """``int_u^T f e^{-rate (s-u)} ds`` at the grid points via the grid back end."""
    g = _Grid(f.T, [f])
    widths = np.diff(g.edges)
    cell = np.sum(f(g.nodes) * np.exp(-rate * (g.nodes - g.edges[:-1, None])) * g.weights, axis=1)
    out = np.zeros(g.edges.size)
    decay = np.exp(-rate * widths)
    for i in range(widths.size - 1, -1, -1):
        out[i] = cell[i] + decay[i] * out[i + 1]
    return np.interp(grid, g.edges, out)


# ---------------------------------------------------------------------------
# Sweeps and wedges


@dataclass(frozen=True)
class SweepPoint:
    nu: float
    summary: Optional[LogNormalSummary]
    note: str = ""

    @property
    def singular(self) -> bool:
        return self.summary is None


def profile_sweep(params, st: MarketState, T: float, nu_grid: Sequence[float]) -> list[SweepPoint]:
    """Moments of the extremal strategy at every ``nu`` of the grid.

    ``params`` is a :class:`RateParams`, an :class:`EquityParams`, or a pair
    ``(RateParams, EquityParams)`` for joint strategies. Singular multipliers
    are kept as points without a summary.
    """
    out = []
    for nu in nu_grid:
        nu = float(nu)
        if nu == 0.5:
            raise ValueError("the grid must exclude nu = 1/2")
        try:
            if isinstance(params, RateParams):
                summ = bond_closed_form_moments(params, st, T, nu)
            elif isinstance(params, EquityParams):
                summ = equity_moments(equity_extremal(params, st, T, nu))
            else:
                rp, ep = params
                summ = joint_pair(rp, ep, st, T, nu)[2]
            out.append(SweepPoint(nu, summ))
        except (SingularNuError, ValueError) as exc:
            out.append(SweepPoint(nu, None, f"singular: {exc}"))
    return out


def _segments(points: Sequence[SweepPoint]):
    """Consecutive (sigma, mu) segments, broken at singular points."""
    segs = []
    prev = None
    for p in points:
        if p.summary is None:
            prev = None
            continue
        cur = (p.summary.sigma, p.summary.mu)
        if prev is not None:
            segs.append((prev, cur))
        prev = cur
    return segs


def _envelope(segs, sigma: float, pick) -> Optional[float]:
    vals = []
    for (s0, m0), (s1, m1) in segs:
        lo, hi = min(s0, s1), max(s0, s1)
        if lo <= sigma <= hi:
            if hi == lo:
                vals.extend([m0, m1])
            else:
                vals.append(m0 + (m1 - m0) * (sigma - s0) / (s1 - s0))
    return pick(vals) if vals else None


def interior_points(
    upper: Sequence[SweepPoint],
    lower: Sequence[SweepPoint],
    candidates: Sequence[SweepPoint],
    tol: float = 1e-6,
) -> list[SweepPoint]:
    """Candidates whose mean lies strictly between the two branch envelopes at equal sigma.

    The upper envelope is the largest mean on the ``upper`` polyline and the
    lower envelope the smallest mean on the ``lower`` polyline.
    """
    up, lo = _segments(upper), _segments(lower)
    inside = []
    for p in candidates:
        if p.summary is None:
            continue
        s, m = p.summary.sigma, p.summary.mu
        u = _envelope(up, s, max)
        l = _envelope(lo, s, min)
        if u is not None and l is not None and l + tol < m < u - tol:
            inside.append(p)
    return inside


def wedge_grids(n_upper: int = 400, n_lower: int = 3000, nu_max: float = 1e4):
    """Default multiplier grids for wedge detection.

    Returns ``(upper, lower)``. ``upper`` covers ``(-inf, 0]`` evenly in
    ``u = 1/(1-2nu)`` and then ``(0, 1/2)`` geometrically towards 1/2;
    ``lower`` covers ``(1/2, nu_max]`` evenly in ``log(nu - 1/2)``.
    """
    u = np.linspace(0.0, 1.0, n_upper + 1)
    upper = [_nu_from_u(float(x)) for x in u]
    upper += list(0.5 - np.logspace(math.log10(0.5), -6, n_upper)[1:])
    lower = list(0.5 + np.logspace(-6, math.log10(nu_max - 0.5), n_lower))
    return upper, lower


def detect_interior_wedge(
    ep: EquityParams,
    st: MarketState,
    T: float,
    nu_range: tuple[float, float] = (0.5, 15.0),
    sigma_max: Optional[float] = None,
    tol: float = 1e-6,
) -> list[SweepPoint]:
    """Extremal strategies with ``nu`` in ``nu_range`` lying strictly inside the profile.

    Only volatilities up to ``sigma_max`` are examined; the default is the
    volatility of the ``nu = 0`` maximum, i.e. the span of the optimal branch.
    Just above ``nu = 1/2`` the family passes through a sequence of singular
    multipliers whose arcs run off to infinite variance; they are far outside
    that window.
    """
    if sigma_max is None:
        sigma_max = equity_moments(equity_extremal(ep, st, T, 0.0)).sigma
    up_grid, low_grid = wedge_grids()
    upper = profile_sweep(ep, st, T, up_grid)
    lower = profile_sweep(ep, st, T, low_grid)
    cands = [
        p
        for p in lower
        if nu_range[0] < p.nu < nu_range[1] and p.summary is not None and p.summary.sigma <= sigma_max
    ]
    return interior_points(upper, lower, cands, tol)


# ---------------------------------------------------------------------------
# Export


def glidepath_csv(strategy: Strategy, sigma_S: Optional[float] = None, n: int = 201) -> str:
    """CSV ``s,exposure,equity_share``; the share column is empty without ``sigma_S``."""
    grid = np.linspace(0.0, strategy.T, n)
    vals = strategy(grid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "exposure", "equity_share"])
    for s, v in zip(grid, vals):
        share = "" if sigma_S is None else f"{v / sigma_S:.12g}"
        w.writerow([f"{s:.12g}", f"{v:.12g}", share])
    return buf.getvalue()


def coefficients_csv(solutions: Sequence[EquityExtremalSolution]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["type", "nu", "b0", "b1", "b2", "c1", "c2"]
    w.writerow(cols)
    for sol in solutions:
        rec = sol.coefficient_record()
        w.writerow([rec["type"], rec["nu"]] + [f"{rec[k]:.15g}" for k in cols[2:]])
    return buf.getvalue()
