"""Deterministic mean-variance investment strategies under mean-reverting returns."""

__version__ = "0.1.0"

from .market_model import (
    PRESETS,
    ConfigError,
    EquityParams,
    MarketState,
    ParameterSet,
    RateParams,
    get_preset,
    load_config,
    parse_config,
    zcb_price,
    zero_yield,
)
from .portfolio_distribution import (
    JointExposure,
    LogNormalSummary,
    horizon_moments_equity_only,
    horizon_moments_general,
    horizon_moments_rates_only,
    joint,
)
from .strategies import ClosedFormStrategy, ConstantStrategy, SampledStrategy, Strategy
from .extremal_strategies import (
    SingularNuError,
    bond_closed_form_moments,
    bond_extremal,
    classify_solution_type,
    equity_extremal,
    equity_moments,
    parse_nu,
    profile_sweep,
)
from .risk_stats import RiskStats, lognormal_stats, stats_table
from .monte_carlo import SimConfig, SimResult, compare_to_analytic, simulate_terminal

__all__ = [
    "__version__",
    "PRESETS",
    "ConfigError",
    "EquityParams",
    "MarketState",
    "ParameterSet",
    "RateParams",
    "get_preset",
    "load_config",
    "parse_config",
    "zcb_price",
    "zero_yield",
    "JointExposure",
    "LogNormalSummary",
    "horizon_moments_equity_only",
    "horizon_moments_general",
    "horizon_moments_rates_only",
    "joint",
    "SingularNuError",
    "bond_closed_form_moments",
    "bond_extremal",
    "classify_solution_type",
    "equity_extremal",
    "equity_moments",
    "parse_nu",
    "profile_sweep",
    "ClosedFormStrategy",
    "ConstantStrategy",
    "SampledStrategy",
    "Strategy",
    "RiskStats",
    "lognormal_stats",
    "stats_table",
    "SimConfig",
    "SimResult",
    "compare_to_analytic",
    "simulate_terminal",
]
