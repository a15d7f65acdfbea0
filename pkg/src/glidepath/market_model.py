"""Two-factor market model: Vasicek short rate and a mean-reverting equity premium.

The short rate follows ``dr = kappa (r_bar - r) dt + sigma_r dW^r`` under the
real-world measure, bonds are priced with pricing parameters ``(a, b)``, and
the stock earns ``r + x`` with an Ornstein-Uhlenbeck premium ``x`` whose
innovations are perfectly negatively correlated with the stock's own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

# Below this |a t| the closed forms lose digits to cancellation, so a
# truncated power series (accurate to machine precision there) is used.
_SERIES_CUTOFF = 0.1
_SERIES_TERMS = 20


class ConfigError(ValueError):
    """Invalid or incomplete parameter input."""


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class RateParams:
    """Short-rate dynamics (kappa, r_bar, sigma_r) and pricing parameters (a, b)."""

    kappa: float
    r_bar: float
    sigma_r: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("kappa", "r_bar", "sigma_r", "a", "b"):
            _check_finite(name, getattr(self, name))
        if self.sigma_r <= 0:
            raise ConfigError("sigma_r must be positive")
        if self.kappa < 0:
            raise ConfigError("kappa must be non-negative")
        if self.a < 0:
            raise ConfigError("a must be non-negative")

    @property
    def constant_price_of_risk(self) -> bool:
        return abs(self.a - self.kappa) <= 1e-12


@dataclass(frozen=True)
class EquityParams:
    """Equity premium dynamics and the rate/stock correlation ``rho``."""

    x_bar: float
    sigma_S: float
    sigma_x: float
    alpha: float
    rho: float = 0.0

    def __post_init__(self):
        for name in ("x_bar", "sigma_S", "sigma_x", "alpha", "rho"):
            _check_finite(name, getattr(self, name))
        if self.sigma_S <= 0:
            raise ConfigError("sigma_S must be positive")
        if self.sigma_x < 0:
            raise ConfigError("sigma_x must be non-negative")
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigError("rho must lie in [-1, 1]")

    @property
    def feedback(self) -> float:
        """Ratio sigma_x / sigma_S that scales the indirect equity effect."""
        return self.sigma_x / self.sigma_S


@dataclass(frozen=True)
class MarketState:
    r0: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        _check_finite("r0", self.r0)
        _check_finite("x0", self.x0)


@dataclass(frozen=True)
class ParameterSet:
    """A named bundle of optional rate and equity parameters plus a default state."""

    name: str
    rates: Optional[RateParams] = None
    equity: Optional[EquityParams] = None
    state: MarketState = field(default_factory=MarketState)

    def with_state(self, r0: float | None = None, x0: float | None = None) -> "ParameterSet":
        st = MarketState(
            self.state.r0 if r0 is None else r0,
            self.state.x0 if x0 is None else x0,
        )
        return ParameterSet(self.name, self.rates, self.equity, st)


# ---------------------------------------------------------------------------
# Auxiliary integrals


def _check_t(t: float) -> None:
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")


def _series(x: float, coef) -> float:
    total = 0.0
    for n in reversed(range(_SERIES_TERMS)):
        total = total * (-x) + coef(n)
    return total


def psi(a: float, t: float) -> float:
    """Integral of exp(-a u) over [0, t]."""
    _check_t(t)
    x = a * t
    if abs(x) < _SERIES_CUTOFF:
        return t * _series(x, lambda n: 1.0 / math.factorial(n + 1))
    return -math.expm1(-x) / a


def theta(a: float, t: float) -> float:
    """Integral of psi(a, s) over [0, t]."""
    _check_t(t)
    x = a * t
    if abs(x) < _SERIES_CUTOFF:
        return t * t * _series(x, lambda n: 1.0 / math.factorial(n + 2))
    return (x + math.expm1(-x)) / (a * a)


def _upsilon_coef(n: int) -> float:
    m = n + 3
    # coefficient of (-x)^n in (-3 + 2x + 4e^{-x} - e^{-2x}) / (2 x^3)
    return (2.0**m - 4.0) / (2.0 * math.factorial(m))


def upsilon(a: float, t: float) -> float:
    """Integral of psi(a, s)**2 over [0, t]."""
    _check_t(t)
    x = a * t
    if abs(x) < _SERIES_CUTOFF:
        return t**3 * _series(x, _upsilon_coef)
    e1 = math.expm1(-x)
    e2 = math.expm1(-2.0 * x)
    # -3 + 2x + 4e^{-x} - e^{-2x} rewritten with expm1 for accuracy
    return (2.0 * x + 4.0 * e1 - e2) / (2.0 * a**3)


# ---------------------------------------------------------------------------
# Bonds and yields


def zcb_price(rp: RateParams, r_t: float, delta: float) -> float:
    """Zero-coupon bond price for time to maturity ``delta``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    ps = psi(rp.a, delta)
    up = upsilon(rp.a, delta)
    return math.exp(-delta * rp.b - ps * (r_t - rp.b) + 0.5 * rp.sigma_r**2 * up)


def zcb_price_vasicek(rp: RateParams, r_t: float, delta: float) -> float:
    """Same price through the classical affine form ``exp(G - H r)``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    a, b, s2 = rp.a, rp.b, rp.sigma_r**2
    if a * delta < 0.1:
        # the sigma^2 / a terms cancel to O(a delta) here; use the integral form
        return zcb_price(rp, r_t, delta)
    h = -math.expm1(-a * delta) / a
    g = (b - s2 / (2 * a * a)) * (h - delta) - s2 / (4 * a) * h * h
    return math.exp(g - h * r_t)


def zero_yield(rp: RateParams, r_t: float, delta: float) -> float:
    """Continuously compounded zero yield; equals ``r_t`` at ``delta = 0``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return float(r_t)
    return rp.b + psi(rp.a, delta) / delta * (r_t - rp.b) - 0.5 * rp.sigma_r**2 * upsilon(rp.a, delta) / delta


def lambda_r_const(rp: RateParams) -> float:
    """Constant market price of interest-rate risk; needs ``a == kappa``."""
    if not rp.constant_price_of_risk:
        raise ConfigError("market price of rate risk is constant only when a == kappa")
    return rp.kappa * (rp.r_bar - rp.b) / rp.sigma_r


# ---------------------------------------------------------------------------
# Equity diagnostics


def mean_reversion_ratio(ep: EquityParams) -> float:
    if ep.sigma_x == 0:
        raise ValueError("sigma_x = 0: ratio is infinite (no premium uncertainty)")
    return ep.alpha * ep.sigma_S / ep.sigma_x


def excess_log_variance(ep: EquityParams, t: float) -> float:
    """Variance of the log excess stock return accumulated over [0, t]."""
    var = (
        ep.sigma_x**2 * upsilon(ep.alpha, t)
        + ep.sigma_S**2 * t
        - 2.0 * ep.sigma_x * ep.sigma_S * theta(ep.alpha, t)
    )
    return max(var, 0.0)


def excess_vol_profile(ep: EquityParams, t):
    """Annualised volatility ``sqrt(Var/t)`` of log excess returns.

    Accepts a scalar or an array of strictly positive times.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0):
        raise ValueError("t must be positive")
    out = np.array([math.sqrt(excess_log_variance(ep, float(s)) / s) for s in ts])
    return float(out[0]) if np.ndim(t) == 0 else out


def asymptotic_excess_vol(ep: EquityParams) -> float:
    """Long-horizon limit of :func:`excess_vol_profile`; ``inf`` when alpha <= 0 and sigma_x > 0."""
    if ep.sigma_x == 0:
        return ep.sigma_S
    if ep.alpha <= 0:
        return math.inf
    return abs(ep.sigma_S - ep.sigma_x / ep.alpha)


def stationary_premium_sd(ep: EquityParams) -> float:
    if ep.sigma_x == 0:
        return 0.0
    if ep.alpha <= 0:
        raise ValueError("alpha <= 0: the premium has no stationary distribution")
    return ep.sigma_x / math.sqrt(2.0 * ep.alpha)


# ---------------------------------------------------------------------------
# Presets and config files

_RATES = {
    "moderate": RateParams(kappa=0.08, r_bar=0.02, sigma_r=0.007, a=0.08, b=0.04),
    "low": RateParams(kappa=0.08, r_bar=0.02, sigma_r=0.007, a=0.08, b=0.03),
}

_X_BAR = 0.045
_SIGMA_S = 0.15

# premium volatility sweep at alpha = 0.06
_SIGMA_X_SETS = {"1": 0.0, "2": 0.003, "3": 0.007, "4": 0.009, "5": 0.015, "6": 0.020, "7": 0.030}
# mean-reversion speed sweep at sigma_x = 0.007; "D" sits exactly at ratio one
_ALPHA_SETS = {"A": 0.90, "B": 0.14, "C": 0.06, "D": 0.007 / 0.15, "E": 0.020, "F": 0.010, "G": 0.0}


def _build_presets() -> dict[str, ParameterSet]:
    out: dict[str, ParameterSet] = {}
    for key, rp in _RATES.items():
        out[f"rates-{key}"] = ParameterSet(f"rates-{key}", rates=rp, state=MarketState(0.0, _X_BAR))
    for key, sx in _SIGMA_X_SETS.items():
        ep = EquityParams(_X_BAR, _SIGMA_S, sx, 0.06)
        out[f"mr-{key}"] = ParameterSet(f"mr-{key}", equity=ep, state=MarketState(0.0, _X_BAR))
    for key, al in _ALPHA_SETS.items():
        ep = EquityParams(_X_BAR, _SIGMA_S, 0.007, al)
        out[f"mr-{key}"] = ParameterSet(f"mr-{key}", equity=ep, state=MarketState(0.0, _X_BAR))
    out["equity-moderate"] = ParameterSet(
        "equity-moderate", equity=EquityParams(_X_BAR, _SIGMA_S, 0.007, 0.06), state=MarketState(0.0, _X_BAR)
    )
    out["equity-high"] = ParameterSet(
        "equity-high", equity=EquityParams(_X_BAR, _SIGMA_S, 0.015, 0.06), state=MarketState(0.0, _X_BAR)
    )
    return out


PRESETS: dict[str, ParameterSet] = _build_presets()


def get_preset(name: str) -> ParameterSet:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None


_RATE_KEYS = ("kappa", "r_bar", "sigma_r", "a", "b")
_EQUITY_KEYS = ("x_bar", "sigma_S", "sigma_x", "alpha")
_OPTIONAL_KEYS = ("rho", "r0", "x0", "name")


def parse_config(text: str, name: str = "config") -> ParameterSet:
    """Parse flat ``key = value`` text into a :class:`ParameterSet`.

    Blank lines and ``#`` comments are ignored. Rate keys and equity keys form
    groups; a group is either complete or entirely absent.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _RATE_KEYS + _EQUITY_KEYS + _OPTIONAL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val

    def num(key: str) -> float:
        try:
            return float(values[key])
        except ValueError:
            raise ConfigError(f"{key}: not a number: {values[key]!r}") from None

    def group(keys):
        present = [k for k in keys if k in values]
        if present and len(present) != len(keys):
            missing = [k for k in keys if k not in values]
            raise ConfigError(f"incomplete parameter group, missing {', '.join(missing)}")
        return bool(present)

    rates = RateParams(*(num(k) for k in _RATE_KEYS)) if group(_RATE_KEYS) else None
    equity = None
    if group(_EQUITY_KEYS):
        rho = num("rho") if "rho" in values else 0.0
        equity = EquityParams(*(num(k) for k in _EQUITY_KEYS), rho=rho)
    elif "rho" in values:
        raise ConfigError("rho given without equity parameters")
    if rates is None and equity is None:
        raise ConfigError("config defines neither rate nor equity parameters")
    x0_default = equity.x_bar if equity is not None else 0.0
    state = MarketState(
        num("r0") if "r0" in values else 0.0,
        num("x0") if "x0" in values else x0_default,
    )
    return ParameterSet(values.get("name", name), rates, equity, state)


def load_config(path: str | Path) -> ParameterSet:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config(text, name=p.stem)
