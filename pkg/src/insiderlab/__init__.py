"""Log-utility portfolios for honest and insider traders.

Brownian-bridge path simulation, optimal fractions under the Ito, forward
and Skorokhod schemes, closed-form values, Monte Carlo wealth, multi-asset
portfolios and a daily-price backtest.
"""

from importlib.metadata import PackageNotFoundError, version

from .market_data import DataError, PriceSeries, backtest, estimate_params, load_csv
from .multiasset import (
    ConvergenceError,
    MultiAssetParams,
    Scheme,
    mapo_partial_info,
    mapo_pi_bridge_or_forward,
    mapo_pi_skorokhod,
    mapo_value,
    numeric_maximize_J,
)
from .paths import BridgeSpec, SamplePath, TimeGrid, bridge_cov, bridge_mean, sample_paths
from .strategies import (
    Constraint,
    MarketParams,
    ParamCurves,
    StrategyKind,
    StrategySpec,
    bridge_or_forward_pi_det,
    forward_pi_adapted,
    merton_pi,
    skorokhod_pi,
    skorokhod_pi_det_params,
)
from .valuation import (
    SignalDistribution,
    unconditional_forward_quadrature,
    unconditional_skorokhod,
    value_bb_or_forward_det,
    value_curve,
    value_forward_adapted_truncated,
    value_forward_noshort,
    value_honest_noshort,
    value_skorokhod,
)
from .wealth import MCConfig, MCEstimate, mc_expected_log_utility, simulate_wealth, skorokhod_terminal_wealth

try:
    __version__ = version("insiderlab")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"
