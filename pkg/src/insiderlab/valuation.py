"""Values of the optimization problem, ``E[log X_T]`` at the optimum.

Piecewise no-short values for the honest, forward and Skorokhod traders, the
deterministic-parameter integral value, the truncated value of the adapted
forward insider, and expectations over a Gaussian terminal signal ``b``.
Quadrature over ``b`` always uses :func:`scipy.integrate.quad` on panels split
at the kinks of the integrand.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad, trapezoid
from scipy.special import ndtr

from .strategies import MarketParams, ParamCurves

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class Region(enum.Enum):
    RISK_FREE_ONLY = "risk-free-only"
    INTERIOR = "interior"
    FULLY_INVESTED = "fully-invested"


@dataclass(frozen=True)
class ValueBreakdown:
    total: float
    region: Region


@dataclass(frozen=True)
class SignalDistribution:
    """Gaussian law ``N(mean, var)`` of the terminal signal ``b``."""

    mean: float
    var: float

    def __post_init__(self):
        if not (self.var > 0 and np.isfinite(self.var)):
            raise ValueError(f"signal variance must be positive, got {self.var}")

    @property
    def std(self) -> float:
        return math.sqrt(self.var)

    def pdf(self, b):
        z = (np.asarray(b, dtype=np.float64) - self.mean) / self.std
        return np.exp(-0.5 * z * z) / (self.std * _SQRT2PI)


def value_honest_noshort(p: MarketParams) -> ValueBreakdown:
    theta, T = p.theta, p.T
    if theta <= 0:
        return ValueBreakdown(p.r * T, Region.RISK_FREE_ONLY)
    if theta < p.sigma:
        return ValueBreakdown(p.r * T + 0.5 * theta**2 * T, Region.INTERIOR)
    return ValueBreakdown(p.mu * T - 0.5 * p.sigma**2 * T, Region.FULLY_INVESTED)


def value_forward_noshort(p: MarketParams, b: float) -> ValueBreakdown:
    """Forward insider value with the fraction clipped to ``[0, 1]``.

    Breakpoints at ``b = -theta T`` and ``b = -theta T + sigma T``.
    """
    T, sigma = p.T, p.sigma
    x = b + p.theta * T  # excess signal over the risk-free breakpoint
    if x <= 0:
        return ValueBreakdown(p.r * T, Region.RISK_FREE_ONLY)
    if x <= sigma * T:
        return ValueBreakdown(p.r * T + 0.5 * (x / T) ** 2 * T, Region.INTERIOR)
    return ValueBreakdown(p.r * T + sigma * x - 0.5 * sigma**2 * T, Region.FULLY_INVESTED)


def value_skorokhod(p: MarketParams, b: float) -> ValueBreakdown:
    """Skorokhod insider value ``rT + (theta sigma T + sigma b) 1{b > -theta T}``."""
    x = b + p.theta * p.T
    if b > -p.theta * p.T:
        return ValueBreakdown(p.r * p.T + p.sigma * x, Region.FULLY_INVESTED)
    return ValueBreakdown(p.r * p.T, Region.RISK_FREE_ONLY)


def value_bb_or_forward_det(c: ParamCurves, b: float) -> float:
    """``int_0^T r_t + ((mu_t - r_t)/sigma_t + b/T)^2 / 2 dt`` by the trapezoid rule."""
    T = c.grid.T
    integrand = c.r + 0.5 * ((c.mu - c.r) / c.sigma + b / T) ** 2
    return float(trapezoid(integrand, c.grid.times))


def value_forward_adapted_truncated(p: MarketParams, b: float, eps: float) -> float:
    """Adapted forward insider value accumulated on ``[0, T - eps]``.

    Uses the bridge mean ``b t/T`` and variance ``t (T-t)/T`` inside the
    expectation.  Grows like ``ln(1/eps) / 2`` as ``eps -> 0``.
    """
    T = p.T
    if not (0 < eps <= T):
        raise ValueError(f"eps must lie in (0, T], got {eps}")
    base = p.r + 0.5 * (p.theta + b / T) ** 2
    return (T - eps) * base + 0.5 * math.log(T / eps) - (T - eps) / (2.0 * T)


def forward_adapted_integrand(p: MarketParams, b: float, t):
    """Expected instantaneous growth of the adapted forward insider at time ``t``."""
    t = np.asarray(t, dtype=np.float64)
    T = p.T
    return p.r + 0.5 * (p.theta + b / T) ** 2 + 0.5 * t / (T * (T - t))


def unconditional_skorokhod(p: MarketParams, d: SignalDistribution) -> float:
    """``E[value_skorokhod(b)]`` for ``b ~ N(e, v)`` via truncated-Gaussian moments."""
    s = d.std
    z = (d.mean + p.theta * p.T) / s
    tail = float(ndtr(z))
    density = math.exp(-0.5 * z * z) / _SQRT2PI
    return p.r * p.T + p.sigma * (d.mean + p.theta * p.T) * tail + p.sigma * s * density


def unconditional_skorokhod_erf(p: MarketParams) -> float:
    """The erf expression for ``b ~ N(0, 1)`` and ``T = 1``, as published."""
    theta, sigma = p.theta, p.sigma
    return (
        p.r
        + 0.5 * theta * sigma * (math.erf(theta / _SQRT2) + 1.0)
        + sigma / _SQRT2PI * math.exp(-0.5 * theta**2)
    )


def forward_unconditional_printed(p: MarketParams) -> float:
    """Literal transcription of the published erf expression for ``E[V_fw]``.

    Stated for ``b ~ N(0, 1)``, ``T = 1``.  Kept for comparison only; see
    :func:`unconditional_forward_quadrature`.
    """
    th, sg = p.theta, p.sigma
    return (
        0.25 * (th + 1.0) * math.erf((sg - th) / _SQRT2)
        + 0.25 * (th + 1.0) * math.erf(th / _SQRT2)
        + 0.25
        * math.sqrt(2.0 / math.pi)
        * math.exp(-0.5 * (th**2 + sg**2))
        * ((th - sg) * math.exp(th * sg) - th * math.exp(0.5 * sg**2))
        + 0.25 * sg * (2.0 * th - sg) * (math.erf((th - sg) / _SQRT2) + 1.0)
        + sg / _SQRT2PI * math.exp(-0.5 * (th - sg) ** 2)
    )


def _truncated_moments(m: float, s: float, lo: float, hi: float):
    """``E[x^k 1{lo < x <= hi}]`` for ``x ~ N(m, s^2)``, ``k = 0, 1, 2``."""

    def phi(z):
        return 0.0 if math.isinf(z) else math.exp(-0.5 * z * z) / _SQRT2PI

    za, zb = (lo - m) / s, (hi - m) / s
    mass = float(ndtr(zb) - ndtr(za))
    pa, pb = phi(za), phi(zb)
    m1 = m * mass + s * (pa - pb)
    a_term = 0.0 if math.isinf(lo) else (lo + m) * pa
    b_term = 0.0 if math.isinf(hi) else (hi + m) * pb
    m2 = (m * m + s * s) * mass + s * (a_term - b_term)
    return mass, m1, m2


def unconditional_forward_closed(p: MarketParams, d: SignalDistribution) -> float:
    """``E[value_forward_noshort(b)]`` from truncated-Gaussian moments of ``b + theta T``."""
    T, sigma = p.T, p.sigma
    m, s = d.mean + p.theta * T, d.std
    _, i1, i2 = _truncated_moments(m, s, 0.0, sigma * T)
    t0, t1, _ = _truncated_moments(m, s, sigma * T, math.inf)
    return p.r * T + 0.5 * i2 / T + sigma * t1 - 0.5 * sigma**2 * T * t0


def _expect_over_signal(value_fn, d: SignalDistribution, kinks, epsabs: float) -> float:
    lo, hi = d.mean - 10.0 * d.std, d.mean + 10.0 * d.std
    cuts = [lo] + sorted(k for k in kinks if lo < k < hi) + [hi]
    per_panel = epsabs / (len(cuts) - 1)
    total = 0.0
    for a, c in zip(cuts[:-1], cuts[1:]):
        val, _ = quad(
            lambda b: value_fn(b) * float(d.pdf(b)),
            a,
            c,
            epsabs=per_panel,
            epsrel=0.0,
            limit=200,
        )
        total += val
    return total


def skorokhod_quadrature(
    p: MarketParams, d: SignalDistribution, epsabs: float = 1e-10
) -> float:
    """Quadrature oracle for :func:`unconditional_skorokhod`."""
    return _expect_over_signal(
        lambda b: value_skorokhod(p, b).total, d, [-p.theta * p.T], epsabs
    )


@dataclass(frozen=True)
class ForwardUnconditional:
    """Forward unconditional value: quadrature plus the two erf reductions."""

    quadrature: float
    closed_form: float
    printed: float | None

    @property
    def printed_discrepancy(self) -> float | None:
        return None if self.printed is None else self.printed - self.quadrature


def unconditional_forward_quadrature(
    p: MarketParams, d: SignalDistribution, epsabs: float = 1e-10
) -> ForwardUnconditional:
    """``E[value_forward_noshort(b)]`` by adaptive quadrature over ``b``.

    The published erf expression is evaluated as well when it applies
    (``T = 1`` and ``b ~ N(0, 1)``) so the two can be compared.
    """
    T = p.T
    kinks = [-p.theta * T, -p.theta * T + p.sigma * T]
    quad_value = _expect_over_signal(
        lambda b: value_forward_noshort(p, b).total, d, kinks, epsabs
    )
    printed = None
    if T == 1.0 and d.mean == 0.0 and d.var == 1.0:
        printed = forward_unconditional_printed(p)
    return ForwardUnconditional(
        quadrature=quad_value,
        closed_form=unconditional_forward_closed(p, d),
        printed=printed,
    )


@dataclass(frozen=True)
class ValueTable:
    b: NDArray[np.float64]
    v_riskfree: NDArray[np.float64]
    v_honest: NDArray[np.float64]
    v_forward: NDArray[np.float64]
    v_skorokhod: NDArray[np.float64]

    columns = ("b", "v_riskfree", "v_honest", "v_forward", "v_skorokhod")

    def rows(self):
        return zip(*(getattr(self, c) for c in self.columns))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows():
                writer.writerow([f"{v:.17g}" for v in row])


def value_curve(p: MarketParams, b_grid) -> ValueTable:
    """Risk-free, honest, forward and Skorokhod values tabulated against ``b``."""
    b = np.asarray(b_grid, dtype=np.float64).ravel()
    if not np.all(np.isfinite(b)):
        raise ValueError("b grid must be finite")
    n = b.size
    return ValueTable(
        b=b,
        v_riskfree=np.full(n, p.r * p.T),
        v_honest=np.full(n, value_honest_noshort(p).total),
        v_forward=np.array([value_forward_noshort(p, x).total for x in b]),
        v_skorokhod=np.array([value_skorokhod(p, x).total for x in b]),
    )

