"""Price series ingestion, parameter estimation and the three-strategy backtest.

All rates are per trading step.  A ``rate`` column in the input CSV is read
as an annualized decimal yield and divided by ``periods_per_year``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .strategies import (
    Constraint,
    MarketParams,
    bridge_or_forward_pi_det,
    merton_pi,
    skorokhod_pi,
)
from .wealth import implied_b, log_wealth_increments, skorokhod_log_wealth

PERIODS_PER_YEAR = 252
MONTH_STEPS = 21
BACKTEST_STRATEGIES = ("honest", "forward", "skorokhod")


class DataError(ValueError):
    """Malformed or insufficient input data."""


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple[_dt.date, ...]
    prices: NDArray[np.float64]
    rates: NDArray[np.float64] | None = None  # annualized decimal yields

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=np.float64)
        if len(self.dates) != prices.size:
            raise DataError("dates and prices differ in length")
        if prices.size == 0:
            raise DataError("no records")
        if np.any(~np.isfinite(prices)) or np.any(prices <= 0):
            raise DataError("prices must be positive and finite")
        for k in range(1, len(self.dates)):
            if self.dates[k] <= self.dates[k - 1]:
                raise DataError(f"dates not strictly increasing at {self.dates[k].isoformat()}")
        object.__setattr__(self, "prices", prices)
        if self.rates is not None:
            rates = np.asarray(self.rates, dtype=np.float64)
            if rates.shape != prices.shape or not np.all(np.isfinite(rates)):
                raise DataError("rates must be finite and parallel to prices")
            object.__setattr__(self, "rates", rates)

    def __len__(self) -> int:
        return self.prices.size

    @property
    def log_returns(self) -> NDArray[np.float64]:
        return np.diff(np.log(self.prices))

    def rescaled(self, c: float) -> "PriceSeries":
        return PriceSeries(self.dates, self.prices * c, self.rates)

    def window(self, start: int, stop: int) -> "PriceSeries":
        rates = None if self.rates is None else self.rates[start:stop]
        return PriceSeries(self.dates[start:stop], self.prices[start:stop], rates)


def load_csv(path: str | Path) -> PriceSeries:
    """Read ``date,price[,rate]`` rows; the header line is optional."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    dates, prices, rates = [], [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and row[0].strip().lower() == "date":
                continue
            if len(row) not in (2, 3):
                raise DataError(f"line {lineno}: expected 2 or 3 fields, got {len(row)}")
            try:
                date = _dt.date.fromisoformat(row[0].strip())
                price = float(row[1])
                rate = float(row[2]) if len(row) == 3 else None
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
            if not (math.isfinite(price) and price > 0):
                raise DataError(f"line {lineno}: price must be positive, got {row[1].strip()}")
            if dates and date <= dates[-1]:
                raise DataError(f"line {lineno}: date {date} is not after {dates[-1]}")
            if (rate is None) != (not rates) and dates:
                raise DataError(f"line {lineno}: rate column present on some rows only")
            dates.append(date)
            prices.append(price)
            if rate is not None:
                rates.append(rate)
    if not dates:
        raise DataError("no records")
    return PriceSeries(tuple(dates), np.array(prices), np.array(rates) if rates else None)


@dataclass(frozen=True)
class EstimatedParams:
    params: MarketParams
    n_returns: int
    sigma_window: str = "daily"
    periods_per_year: int = PERIODS_PER_YEAR

    def to_dict(self) -> dict:
        p = self.params
        return {
            "mu": p.mu,
            "r": p.r,
            "sigma": p.sigma,
            "T": p.T,
            "n_returns": self.n_returns,
            "sigma_window": self.sigma_window,
            "periods_per_year": self.periods_per_year,
        }


def estimate_params(
    s: PriceSeries,
    r: float | None = None,
    horizon_steps: int | None = None,
    sigma_window: str = "daily",
    periods_per_year: int = PERIODS_PER_YEAR,
) -> EstimatedParams:
    """Per-step drift, volatility and rate from a price series.

    ``mu`` is the mean log return and ``sigma`` its sample standard deviation
    (``ddof=1``).  With ``sigma_window="monthly"`` the deviation is taken over
    non-overlapping ``21``-step log returns and rescaled by ``1/sqrt(21)``.
    ``r`` is a per-step rate; when omitted it is the mean of the series'
    annualized rates divided by ``periods_per_year``.
    """
    if len(s) < 3:
        raise DataError(f"need at least 3 prices to estimate parameters, got {len(s)}")
    lr = s.log_returns
    mu = float(np.mean(lr))
    if sigma_window == "daily":
        sigma = float(np.std(lr, ddof=1))
    elif sigma_window == "monthly":
        n_months = lr.size // MONTH_STEPS
        if n_months < 2:
            raise DataError(f"monthly sigma needs at least {2 * MONTH_STEPS} returns")
        monthly = lr[: n_months * MONTH_STEPS].reshape(n_months, MONTH_STEPS).sum(axis=1)
        sigma = float(np.std(monthly, ddof=1)) / math.sqrt(MONTH_STEPS)
    else:
        raise ValueError(f"sigma_window must be 'daily' or 'monthly', got {sigma_window!r}")
    if r is None:
        if s.rates is None:
            raise DataError("no risk-free rate given and the series has no rate column")
        r = float(np.mean(s.rates)) / periods_per_year
    T = float(lr.size if horizon_steps is None else horizon_steps)
    return EstimatedParams(MarketParams(mu, float(r), sigma, T), lr.size, sigma_window, periods_per_year)


@dataclass(frozen=True)
class BacktestPath:
    strategy: str
    dates: tuple[_dt.date, ...]
    wealth: NDArray[np.float64]
    pi: NDArray[np.float64]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "wealth", "pi"])
            for k, d in enumerate(self.dates):
                pi = f"{self.pi[k]:.17g}" if k < self.pi.size else ""
                writer.writerow([d.isoformat(), f"{self.wealth[k]:.17g}", pi])


@dataclass(frozen=True)
class BacktestResult:
    paths: dict[str, BacktestPath]
    implied_b: float
    params: MarketParams
    skorokhod_closed_form: float | None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def summary(self) -> dict:
        return {
            "implied_b": self.implied_b,
            "params": {"mu": self.params.mu, "r": self.params.r, "sigma": self.params.sigma, "T": self.params.T},
            "terminal_wealth": {k: float(v.wealth[-1]) for k, v in self.paths.items()},
            "skorokhod_closed_form_wealth": self.skorokhod_closed_form,
            "notes": list(self.notes),
        }

    def write(self, out_dir: str | Path) -> list[str]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        names = []
        for k, v in self.paths.items():
            v.to_csv(out_dir / f"backtest_{k}.csv")
            names.append(f"backtest_{k}.csv")
        (out_dir / "backtest_summary.json").write_text(json.dumps(self.summary(), indent=2) + "\n")
        names.append("backtest_summary.json")
        return names


def _fractions(name: str, p: MarketParams, b: float, constraint: Constraint) -> float:
    if name == "honest":
        return merton_pi(p, constraint)
    if name == "forward":
        return bridge_or_forward_pi_det(p, b, constraint)
    if name == "skorokhod":
        return skorokhod_pi(p, b, Constraint.NO_SHORT)
    raise ValueError(f"unknown backtest strategy {name!r}; choose from {BACKTEST_STRATEGIES}")


def backtest(
    s: PriceSeries,
    e: EstimatedParams,
    strategies=BACKTEST_STRATEGIES,
    horizon: int | None = None,
    start: int = 0,
    constraint: Constraint = Constraint.NO_SHORT,
    rolling_window: int | None = None,
) -> BacktestResult:
    """Trade each strategy over ``horizon`` steps from index ``start``.

    The insider's ``b`` is implied from the price at ``start + horizon`` with
    the estimated parameters.  Every strategy uses the daily update
    ``X_t = X_{t-1} exp((1 - pi) r_{t-1} + pi log(S_t / S_{t-1}))`` with ``r``
    taken from the series' rate column when present.  ``rolling_window``
    re-estimates ``mu`` and ``sigma`` before each step from the trailing
    returns; ``b`` stays at its initial value.
    """
    if horizon is None:
        horizon = len(s) - 1 - start
    if horizon < 1 or start < 0 or start + horizon >= len(s):
        raise DataError(
            f"horizon {horizon} from index {start} exceeds the series length {len(s)}"
        )
    if rolling_window is not None and (rolling_window < 2 or rolling_window > start):
        raise DataError("rolling_window must be at least 2 and at most the start index")
    base = e.params
    p = MarketParams(base.mu, base.r, base.sigma, float(horizon))
    prices = s.prices[start : start + horizon + 1]
    dates = s.dates[start : start + horizon + 1]
    b = implied_b(prices[0], prices[-1], p)
    log_ret = np.diff(np.log(prices))
    if s.rates is not None:
        r_steps = s.rates[start : start + horizon] / e.periods_per_year
    else:
        r_steps = np.full(horizon, p.r)

    all_lr = s.log_returns
    paths = {}
    for name in strategies:
        if rolling_window is None:
            pi = np.full(horizon, _fractions(name, p, b, constraint))
        else:
            pi = np.empty(horizon)
            for k in range(horizon):
                hist = all_lr[start + k - rolling_window : start + k]
                pk = MarketParams(float(np.mean(hist)), p.r, float(np.std(hist, ddof=1)), p.T)
                pi[k] = _fractions(name, pk, b, constraint)
        inc = log_wealth_increments(pi, log_ret, r_steps, 0.0, "discrete")
        wealth = np.exp(np.concatenate(([0.0], np.cumsum(inc))))
        paths[name] = BacktestPath(name, dates, wealth, pi)

    notes = []
    sk_closed = None
    if "skorokhod" in strategies:
        sk_closed = math.exp(skorokhod_log_wealth(p, b, skorokhod_pi(p, b)))
        if s.rates is not None:
            notes.append("closed-form Skorokhod wealth uses the constant estimated rate")
    return BacktestResult(paths, b, p, sk_closed, tuple(notes))
