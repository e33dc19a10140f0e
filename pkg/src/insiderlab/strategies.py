"""Optimal stock fractions for honest and insider traders.

All formulas are for logarithmic utility with a single risky asset.  The
``NoShort`` constraint projects a fraction onto ``[0, 1]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid

from .paths import TimeGrid


class StrategyKind(enum.Enum):
    HONEST = "honest"
    BRIDGE_INSIDER = "bridge"
    FORWARD_DETERMINISTIC = "forward-det"
    FORWARD_ADAPTED = "forward-adapted"
    SKOROKHOD_INSIDER = "skorokhod"


class Constraint(enum.Enum):
    ALLOW_SHORT = "allow-short"
    NO_SHORT = "no-short"


@dataclass(frozen=True)
class MarketParams:
    """Constant drift ``mu``, risk-free rate ``r``, volatility ``sigma``, horizon ``T``.

    ``sigma == 0`` is accepted as the degenerate riskless-stock limit; ratios
    divided by it become signed infinities, which the no-short clamp resolves.
    """

    mu: float
    r: float
    sigma: float
    T: float

    def __post_init__(self):
        for name in ("mu", "r", "sigma", "T"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def theta(self) -> float:
        """Market price of risk ``(mu - r) / sigma``."""
        return _ratio(self.mu - self.r, self.sigma)


def _ratio(num, den):
    if den == 0:
        return 0.0 if num == 0 else math.copysign(math.inf, num)
    return num / den


@dataclass(frozen=True)
class ParamCurves:
    """Deterministic ``mu_t``, ``r_t``, ``sigma_t`` sampled on a grid."""

    grid: TimeGrid
    mu: NDArray[np.float64]
    r: NDArray[np.float64]
    sigma: NDArray[np.float64]

    def __post_init__(self):
        n = self.grid.n_steps + 1
        for name in ("mu", "r", "sigma"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=np.float64), (n,))
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} curve must be finite")
            object.__setattr__(self, name, np.array(arr))
        if np.any(self.sigma <= 0):
            raise ValueError("sigma curve must be positive")

    @classmethod
    def constant(cls, p: MarketParams, n_steps: int = 1) -> "ParamCurves":
        return cls(TimeGrid(p.T, n_steps), p.mu, p.r, p.sigma)


@dataclass(frozen=True)
class StrategySpec:
    kind: StrategyKind
    constraint: Constraint = Constraint.ALLOW_SHORT

    def __post_init__(self):
        kind = StrategyKind(self.kind)
        constraint = Constraint(self.constraint)
        if kind is StrategyKind.SKOROKHOD_INSIDER and constraint is not Constraint.NO_SHORT:
            raise ValueError("the Skorokhod insider optimum only exists under no-short")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "constraint", constraint)

    @classmethod
    def from_name(cls, name: str, constraint: str | Constraint | None = None) -> "StrategySpec":
        kind = StrategyKind(name)
        if constraint is None:
            constraint = (
                Constraint.NO_SHORT
                if kind is StrategyKind.SKOROKHOD_INSIDER
                else Constraint.ALLOW_SHORT
            )
        return cls(kind, Constraint(constraint))


def apply_constraint(pi, constraint: Constraint = Constraint.ALLOW_SHORT):
    """Project onto ``[0, 1]`` under no-short; identity otherwise."""
    if Constraint(constraint) is Constraint.NO_SHORT:
        clipped = np.clip(pi, 0.0, 1.0)
        return float(clipped) if np.ndim(clipped) == 0 else clipped
    return pi


def merton_pi(p: MarketParams, constraint: Constraint = Constraint.ALLOW_SHORT) -> float:
    """Honest trader's fraction ``(mu - r) / sigma^2``."""
    return apply_constraint(_ratio(p.mu - p.r, p.sigma**2), constraint)


def bridge_or_forward_pi_det(
    p: MarketParams, b: float, constraint: Constraint = Constraint.ALLOW_SHORT
) -> float:
    """Insider fraction with deterministic portfolios: ``(mu-r)/sigma^2 + b/(sigma T)``.

    The Brownian-bridge (Ito) and forward schemes give the same value.
    """
    return apply_constraint(
        _ratio(p.mu - p.r, p.sigma**2) + _ratio(b, p.sigma * p.T), constraint
    )


def forward_pi_adapted(
    p: MarketParams,
    b: float,
    t,
    B_t,
    constraint: Constraint = Constraint.ALLOW_SHORT,
):
    """Adapted forward insider: ``(mu-r)/sigma^2 + (b - B_t) / (sigma (T - t))``.

    Vectorised over ``t`` and ``B_t``.  Undefined at ``t >= T``.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t >= p.T) or np.any(t < 0):
        raise ValueError(f"adapted forward portfolio needs 0 <= t < T={p.T}")
    pi = (p.mu - p.r) / p.sigma**2 + (b - np.asarray(B_t)) / (p.sigma * (p.T - t))
    pi = apply_constraint(pi, constraint)
    return float(pi) if np.ndim(pi) == 0 else pi


def skorokhod_pi(
    p: MarketParams, b: float, constraint: Constraint = Constraint.NO_SHORT
) -> float:
    """Skorokhod insider under no-short: 1 if ``b > -theta T`` else 0.

    The tie ``b == -theta T`` goes to the risk-free asset.
    """
    if Constraint(constraint) is not Constraint.NO_SHORT:
        raise ValueError(
            "Skorokhod value is affine in pi; it has no optimum when shorting is allowed"
        )
    return 1.0 if b > -p.theta * p.T else 0.0


@dataclass(frozen=True)
class SkorokhodDetSolution:
    """Candidate portfolio curve and the terminal value it requires.

    The curve is optimal only when ``b`` matches ``b_required``;
    ``condition_met`` reports whether it does.
    """

    pi: NDArray[np.float64]
    b_required: float
    condition_met: bool
    mismatch: float


def skorokhod_pi_det_params(c: ParamCurves, b: float) -> SkorokhodDetSolution:
    T = c.grid.T
    pi = (c.mu - c.r) / c.sigma**2 + b / (c.sigma * T)
    b_required = float(trapezoid((c.r - c.mu) / c.sigma, c.grid.times))
    mismatch = abs(b - b_required)
    return SkorokhodDetSolution(
        pi=pi,
        b_required=b_required,
        condition_met=mismatch <= 1e-8 * max(1.0, abs(b)),
        mismatch=mismatch,
    )


def growth_rate(p: MarketParams, pi: float, b: float) -> float:
    """Per-unit-time objective ``r + (mu-r) pi + pi sigma b/T - sigma^2 pi^2 / 2``."""
    return p.r + (p.mu - p.r) * pi + pi * p.sigma * b / p.T - 0.5 * p.sigma**2 * pi**2


def deterministic_pi(spec: StrategySpec, p: MarketParams, b: float) -> float:
    """Constant fraction for every strategy except the adapted forward one."""
    kind = spec.kind
    if kind is StrategyKind.HONEST:
        return merton_pi(p, spec.constraint)
    if kind in (StrategyKind.BRIDGE_INSIDER, StrategyKind.FORWARD_DETERMINISTIC):
        return bridge_or_forward_pi_det(p, b, spec.constraint)
    if kind is StrategyKind.SKOROKHOD_INSIDER:
        return skorokhod_pi(p, b, spec.constraint)
    raise ValueError(f"{kind.value} portfolio depends on the path; use forward_pi_adapted")
