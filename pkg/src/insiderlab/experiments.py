"""Experiment drivers shared by the CLI and the notebooks.

Each driver returns plain arrays and dictionaries; writing files is left to
the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .paths import BridgeSpec, TimeGrid, bridge_values_from_brownian, brownian_from_normals, standard_normals
from .strategies import Constraint, MarketParams, bridge_or_forward_pi_det, skorokhod_pi
from .valuation import (
    SignalDistribution,
    skorokhod_quadrature,
    unconditional_forward_quadrature,
    unconditional_skorokhod,
    unconditional_skorokhod_erf,
    value_forward_noshort,
    value_skorokhod,
)
from .wealth import log_wealth_increments


@dataclass(frozen=True)
class HistogramResult:
    """Per-draw values of the forward and Skorokhod insiders for ``b ~ N(e, var)``.

    ``v_forward`` and ``v_skorokhod`` are the closed-form values of the
    problem given each drawn ``b``.  ``log_wealth_*`` are the realized
    log-wealths of the same fractions traded with the daily update on a stock
    path whose driving bridge ends at that ``b``.
    """

    b: NDArray[np.float64]
    v_forward: NDArray[np.float64]
    v_skorokhod: NDArray[np.float64]
    log_wealth_forward: NDArray[np.float64]
    log_wealth_skorokhod: NDArray[np.float64]

    def summary(self) -> dict:
        out = {}
        for name in ("v_forward", "v_skorokhod", "log_wealth_forward", "log_wealth_skorokhod"):
            x = getattr(self, name)
            out[name] = {
                "mean": math.fsum(x) / x.size,
                "var": float(np.var(x, ddof=1)) if x.size > 1 else 0.0,
            }
        out["n_draws"] = int(self.b.size)
        out["skorokhod_mean_exceeds_forward"] = out["v_skorokhod"]["mean"] > out["v_forward"]["mean"]
        out["skorokhod_var_below_forward"] = out["v_skorokhod"]["var"] < out["v_forward"]["var"]
        return out

    def histogram(self, bins: int = 50):
        """Counts of both value samples on shared bin edges."""
        both = np.concatenate((self.v_forward, self.v_skorokhod))
        edges = np.histogram_bin_edges(both, bins=bins)
        cf, _ = np.histogram(self.v_forward, edges)
        cs, _ = np.histogram(self.v_skorokhod, edges)
        return edges, cf, cs


def histogram_experiment(
    p: MarketParams,
    e: float,
    var: float,
    draws: int,
    seed: int,
    steps: int = 64,
    S0: float = 100.0,
) -> HistogramResult:
    """Draw ``b ~ N(e, var)`` and evaluate both insider schemes per draw.

    Draw ``j`` takes its ``b`` and its ``steps`` path increments from stream
    ``(seed, j)``, so results do not depend on how the draws are batched.
    """
    d = SignalDistribution(e, var)
    if draws < 1:
        raise ValueError(f"draws must be positive, got {draws}")
    grid = TimeGrid(p.T, steps)
    dt = grid.dt
    b = np.empty(draws)
    lw_fw = np.empty(draws)
    lw_sk = np.empty(draws)
    for j in range(draws):
        z = standard_normals(seed, j, steps + 1)
        b[j] = d.mean + d.std * z[0]
        bridge = bridge_values_from_brownian(
            grid, brownian_from_normals(grid, z[1:]), BridgeSpec(b[j], p.T)
        )
        log_ret = (p.mu - 0.5 * p.sigma**2) * dt + p.sigma * np.diff(bridge)
        log_s = np.log(S0) + np.concatenate(([0.0], np.cumsum(log_ret)))
        lr = np.diff(log_s)
        pi_fw = bridge_or_forward_pi_det(p, b[j], Constraint.NO_SHORT)
        pi_sk = skorokhod_pi(p, b[j])
        lw_fw[j] = math.fsum(log_wealth_increments(pi_fw, lr, p.r * dt, 0.0, "discrete"))
        lw_sk[j] = math.fsum(log_wealth_increments(pi_sk, lr, p.r * dt, 0.0, "discrete"))
    v_fw = np.array([value_forward_noshort(p, x).total for x in b])
    v_sk = np.array([value_skorokhod(p, x).total for x in b])
    return HistogramResult(b, v_fw, v_sk, lw_fw, lw_sk)


def weighted_value_curve(p: MarketParams, d: SignalDistribution | None = None, n: int = 401):
    """Integrand ``V(b) pdf(b)`` for both schemes and the unconditional values.

    Returns ``(table, summary)`` where ``table`` has columns
    ``b, pdf, weighted_forward, weighted_skorokhod``.
    """
    d = SignalDistribution(0.0, 1.0) if d is None else d
    b = np.linspace(d.mean - 5 * d.std, d.mean + 5 * d.std, n)
    pdf = d.pdf(b)
    wf = np.array([value_forward_noshort(p, x).total for x in b]) * pdf
    ws = np.array([value_skorokhod(p, x).total for x in b]) * pdf
    fwd = unconditional_forward_quadrature(p, d)
    summary = {
        "signal": {"mean": d.mean, "var": d.var},
        "skorokhod": {
            "closed_form": unconditional_skorokhod(p, d),
            "quadrature": skorokhod_quadrature(p, d),
            "erf_expression": (
                unconditional_skorokhod_erf(p) if (p.T == 1.0 and d.mean == 0.0 and d.var == 1.0) else None
            ),
        },
        "forward": {
            "quadrature": fwd.quadrature,
            "closed_form": fwd.closed_form,
            "printed_expression": fwd.printed,
            "printed_minus_quadrature": fwd.printed_discrepancy,
        },
    }
    table = np.column_stack((b, pdf, wf, ws))
    return table, summary
