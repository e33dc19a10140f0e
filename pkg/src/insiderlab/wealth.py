"""Wealth simulation, Monte Carlo log-utility and the Skorokhod closed form.

Two per-step wealth updates are available, both holding the fraction ``pi``
fixed at the left grid point:

``"discrete"``
    ``log X_k = log X_{k-1} + (1 - pi) r dt + pi log(S_k / S_{k-1})``, the
    daily backtest rule.  It is linear in ``pi`` in log space.
``"exact"``
    The log of the continuously rebalanced wealth SDE over the step,
    ``(1 - pi) r dt + pi log(S_k / S_{k-1}) + pi (1 - pi) sigma^2 dt / 2``.
    This is the one whose expectation converges to the closed-form values.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .paths import BridgeSpec, SamplePath, TimeGrid, sample_paths
from .strategies import (
    MarketParams,
    StrategyKind,
    StrategySpec,
    apply_constraint,
    deterministic_pi,
)

UPDATES = ("discrete", "exact")


@dataclass(frozen=True)
class MCConfig:
    n_paths: int
    master_seed: int
    grid: TimeGrid

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError(f"n_paths must be a positive integer, got {self.n_paths}")


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    strategy: str | None = None

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "strategy": self.strategy,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


@dataclass(frozen=True)
class WealthPath:
    """Wealth on the grid (``wealth[0] == 1``) and the fraction held on each step."""

    grid: TimeGrid
    wealth: NDArray[np.float64]
    pi: NDArray[np.float64]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "wealth", "pi"])
            for k, t in enumerate(self.grid.times):
                pi = f"{self.pi[k]:.17g}" if k < self.pi.size else ""
                writer.writerow([f"{t:.17g}", f"{self.wealth[k]:.17g}", pi])


def stock_from_driving(S0: float, p: MarketParams, driving: SamplePath) -> SamplePath:
    """Geometric Brownian motion ``S0 exp((mu - sigma^2/2) t + sigma B_t)`` on the driving path."""
    if S0 <= 0:
        raise ValueError(f"S0 must be positive, got {S0}")
    t = driving.grid.times
    log_s = (p.mu - 0.5 * p.sigma**2) * t + p.sigma * driving.values
    return SamplePath(driving.grid, S0 * np.exp(log_s))


def driving_from_stock(stock: SamplePath, p: MarketParams) -> SamplePath:
    """Invert :func:`stock_from_driving`; needs ``sigma > 0``."""
    if p.sigma == 0:
        raise ValueError("driving process is not identifiable when sigma = 0")
    s = stock.values
    if np.any(s <= 0):
        raise ValueError("stock prices must be positive")
    t = stock.grid.times
    b = (np.log(s / s[0]) - (p.mu - 0.5 * p.sigma**2) * t) / p.sigma
    b[0] = 0.0
    return SamplePath(stock.grid, b)


def implied_b(S0: float, S_T: float, p: MarketParams) -> float:
    """Terminal driving value ``b`` that makes the stock end at ``S_T``."""
    if S0 <= 0 or S_T <= 0:
        raise ValueError("prices must be positive")
    if p.sigma == 0:
        raise ValueError("implied b is undefined when sigma = 0")
    return (math.log(S_T / S0) - (p.mu - 0.5 * p.sigma**2) * p.T) / p.sigma


def log_wealth_increments(pi, log_returns, r_dt, sigma2_dt, update: str = "discrete"):
    """Per-step log-wealth increments for fractions ``pi`` held over each step."""
    pi = np.asarray(pi, dtype=np.float64)
    inc = (1.0 - pi) * r_dt + pi * log_returns
    if update == "exact":
        inc = inc + 0.5 * pi * (1.0 - pi) * sigma2_dt
    elif update != "discrete":
        raise ValueError(f"update must be one of {UPDATES}, got {update!r}")
    return inc


def _portfolio_on_grid(spec: StrategySpec, p: MarketParams, b: float, t_left, b_left):
    """Fractions held on each step, from left-point times and driving values."""
    b_left = np.asarray(b_left, dtype=np.float64)
    if spec.kind is StrategyKind.FORWARD_ADAPTED:
        pi = (p.mu - p.r) / p.sigma**2 + (b - b_left) / (p.sigma * (p.T - t_left))
        return apply_constraint(pi, spec.constraint)
    return np.full(b_left.shape, deterministic_pi(spec, p, b))


def simulate_wealth(
    stock: SamplePath,
    strategy: StrategySpec,
    p: MarketParams,
    b: float,
    update: str = "discrete",
) -> WealthPath:
    """Wealth path of a strategy trading on a given stock path, starting at 1.

    For the adapted forward insider the driving value ``B_t`` is read back from
    the stock path.  Its fraction is undefined on the last step when the grid
    reaches ``T``; stop the grid before ``T`` for that strategy.
    """
    s = stock.values
    if np.any(s <= 0):
        raise ValueError("stock prices must be strictly positive")
    grid = stock.grid
    if not math.isclose(grid.T, p.T, rel_tol=1e-14):
        raise ValueError(f"stock grid horizon {grid.T} differs from market horizon {p.T}")
    if strategy.kind is StrategyKind.FORWARD_ADAPTED:
        driving = driving_from_stock(stock, p).values
    else:
        driving = np.zeros_like(s)
    pi = _portfolio_on_grid(strategy, p, b, grid.times[:-1], driving[:-1])
    inc = log_wealth_increments(
        pi, np.diff(np.log(s)), p.r * grid.dt, p.sigma**2 * grid.dt, update
    )
    wealth = np.exp(np.concatenate(([0.0], np.cumsum(inc))))
    return WealthPath(grid, wealth, np.asarray(pi, dtype=np.float64))


def skorokhod_terminal_wealth(p: MarketParams, b: float, pi: float) -> float:
    """Explicit Skorokhod solution at ``T`` for a constant fraction ``pi``.

    ``exp((1 - pi) r T + pi mu T + sigma pi b)``; no path enters.
    """
    return math.exp(skorokhod_log_wealth(p, b, pi))


def skorokhod_log_wealth(p: MarketParams, b: float, pi: float) -> float:
    return p.r * p.T + pi * (p.mu - p.r) * p.T + p.sigma * pi * b


def _driving_for(spec: StrategySpec):
    if spec.kind is StrategyKind.HONEST:
        return None
    if spec.kind is StrategyKind.BRIDGE_INSIDER:
        return "sequential"
    return "brownian"


def _log_wealth_sum(spec, p, b, times, driving, update):
    """Terminal log-wealth per row for driving values sampled at ``times``."""
    dt = np.diff(times)
    dB = np.diff(driving, axis=1)
    log_ret = (p.mu - 0.5 * p.sigma**2) * dt + p.sigma * dB
    pi = _portfolio_on_grid(spec, p, b, times[:-1], driving[:, :-1])
    inc = log_wealth_increments(pi, log_ret, p.r * dt, p.sigma**2 * dt, update)
    return inc.sum(axis=1)


def _terminal_log_wealth(
    spec: StrategySpec,
    p: MarketParams,
    b: float,
    grid: TimeGrid,
    seed: int,
    start: int,
    count: int,
    n_active: int,
    update: str,
    richardson: bool,
) -> NDArray[np.float64]:
    method = _driving_for(spec)
    bridge = None if method is None else BridgeSpec(b, grid.T)
    driving = sample_paths(grid, count, seed, bridge, method or "sequential", start)
    driving = driving[:, : n_active + 1]
    times = grid.times[: n_active + 1]
    fine = _log_wealth_sum(spec, p, b, times, driving, update)
    if not richardson:
        return fine
    coarse = _log_wealth_sum(spec, p, b, times[::2], driving[:, ::2], update)
    return 2.0 * fine - coarse


def mc_expected_log_utility(
    strategy: StrategySpec,
    p: MarketParams,
    b: float,
    cfg: MCConfig,
    stop_time: float | None = None,
    update: str = "exact",
    workers: int = 1,
    chunk_size: int | None = None,
    richardson: bool = False,
) -> MCEstimate:
    """Monte Carlo estimate of ``E[log X]`` at ``stop_time`` (default ``T``).

    Honest traders see a standard Brownian driver; insiders see a bridge
    pinned at ``b``.  Path ``i`` always uses the stream ``(master_seed, i)``
    and the reduction runs in path order, so ``workers`` never changes the
    result.

    ``richardson=True`` replaces each path's log-wealth ``L_dt`` by
    ``2 L_dt - L_2dt``, the coarse value reusing every other grid point of the
    same path.  This cancels the first-order bias of holding the fraction
    fixed over a step, which matters for the adapted forward insider whose
    fraction blows up near ``T``.
    """
    grid = cfg.grid
    if not math.isclose(grid.T, p.T, rel_tol=1e-14):
        raise ValueError(f"grid horizon {grid.T} differs from market horizon {p.T}")
    if stop_time is None:
        n_active = grid.n_steps
    else:
        n_active = int(round(stop_time / grid.dt))
        if not math.isclose(n_active * grid.dt, stop_time, rel_tol=1e-9) or not (
            0 < n_active <= grid.n_steps
        ):
            raise ValueError(f"stop_time {stop_time} is not a grid point in (0, T]")
    if richardson and n_active % 2:
        raise ValueError("richardson extrapolation needs an even number of active steps")
    if strategy.kind is StrategyKind.FORWARD_ADAPTED and n_active == grid.n_steps:
        raise ValueError("adapted forward portfolio is singular at T; pass stop_time < T")

    if chunk_size is None:
        chunk_size = max(1, min(cfg.n_paths, 4_000_000 // grid.n_steps))
    starts = list(range(0, cfg.n_paths, chunk_size))

    def run(start):
        count = min(chunk_size, cfg.n_paths - start)
        return _terminal_log_wealth(
            strategy, p, b, grid, cfg.master_seed, start, count, n_active, update, richardson
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    values = np.concatenate(parts)
    return summarize(values, strategy.kind.value)


def summarize(values: NDArray[np.float64], strategy: str | None = None) -> MCEstimate:
    """Mean and standard error with exactly rounded, order-fixed sums."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    mean = math.fsum(values) / n
    if n < 2:
        return MCEstimate(mean, 0.0, n, strategy)
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return MCEstimate(mean, math.sqrt(var / n), n, strategy)
