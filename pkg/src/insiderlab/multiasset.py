"""Multi-asset insider portfolios (row-vector convention, ``pi`` has length d).

The per-unit-time objectives, with ``c = mu - r 1`` and mask ``M`` (diagonal
0/1 matrix marking the Brownian components the insider knows):

bridge / forward  ``J = r + pi.c + pi sigma M b / T - |pi sigma|^2 / 2``

Skorokhod         ``J = r + pi.c + pi sigma M b / T - pi sigma (I - M) sigma' pi' / 2``

With full information (``M = I``) the Skorokhod objective is affine, so its
optimum over ``[0, 1]^d`` is a vertex.  The closed forms below are checked
against :func:`numeric_maximize_J`, an accelerated projected-gradient solver
that only ever sees ``J`` and its gradient.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

MAX_CONDITION = 1e10


class Scheme(enum.Enum):
    BRIDGE_OR_FORWARD = "bridge-forward"
    SKOROKHOD = "skorokhod"


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class MultiAssetParams:
    mu: NDArray[np.float64]
    r: float
    sigma: NDArray[np.float64]
    T: float
    b: NDArray[np.float64]
    insider_mask: NDArray[np.bool_] | None = None

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        d = mu.size
        sigma = np.asarray(self.sigma, dtype=np.float64).reshape(d, d)
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        mask = (
            np.ones(d, dtype=bool)
            if self.insider_mask is None
            else np.atleast_1d(np.asarray(self.insider_mask, dtype=bool))
        )
        if b.shape != (d,) or mask.shape != (d,):
            raise ValueError(f"b and mask must have length d={d}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma)) and np.all(np.isfinite(b))):
            raise ValueError("parameters must be finite")
        cond = np.linalg.cond(sigma)
        if not cond <= MAX_CONDITION:
            raise ValueError(f"volatility matrix is singular or ill-conditioned (cond={cond:.3g})")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "insider_mask", mask)
        object.__setattr__(self, "r", float(self.r))

    @property
    def d(self) -> int:
        return self.mu.size

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.sigma))

    @property
    def excess(self) -> NDArray[np.float64]:
        return self.mu - self.r

    @property
    def masked_b(self) -> NDArray[np.float64]:
        """``b`` with non-insider components set to 0."""
        return np.where(self.insider_mask, self.b, 0.0)

    def with_mask(self, mask) -> "MultiAssetParams":
        return MultiAssetParams(self.mu, self.r, self.sigma, self.T, self.b, mask)

    @classmethod
    def from_dict(cls, data: dict) -> "MultiAssetParams":
        return cls(
            mu=data["mu"],
            r=data["r"],
            sigma=data["sigma"],
            T=data["T"],
            b=data["b"],
            insider_mask=data.get("mask"),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "MultiAssetParams":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "r": self.r,
            "sigma": self.sigma.tolist(),
            "T": self.T,
            "b": self.b.tolist(),
            "mask": self.insider_mask.tolist(),
        }


@dataclass(frozen=True)
class PortfolioVector:
    pi: NDArray[np.float64]
    residual: float | None = None
    iterations: int | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def satisfies_no_short(self) -> bool:
        """Each component in ``[0, 1]`` and the components sum to at most 1."""
        tol = 1e-12
        return bool(
            np.all(self.pi >= -tol) and np.all(self.pi <= 1 + tol) and self.pi.sum() <= 1 + tol
        )


def _coefficients(m: MultiAssetParams, scheme: Scheme, use_mask: bool):
    """Linear coefficient ``c`` and curvature ``A`` with ``J = r + pi.c - pi A pi / 2``."""
    b = m.masked_b if use_mask else m.b
    lin = m.excess + m.sigma @ b / m.T
    if Scheme(scheme) is Scheme.BRIDGE_OR_FORWARD:
        return lin, m.sigma @ m.sigma.T
    if use_mask:
        keep = (~m.insider_mask).astype(np.float64)
        return lin, (m.sigma * keep) @ m.sigma.T
    return lin, np.zeros((m.d, m.d))


def objective(m: MultiAssetParams, scheme: Scheme, pi, use_mask: bool = False):
    """Value and gradient of ``J`` at ``pi``."""
    lin, curv = _coefficients(m, scheme, use_mask)
    pi = np.asarray(pi, dtype=np.float64)
    value = m.r + pi @ lin - 0.5 * pi @ curv @ pi
    return float(value), lin - curv @ pi


def mapo_pi_bridge_or_forward(m: MultiAssetParams) -> PortfolioVector:
    """``pi' = (sigma sigma')^{-1} (mu - r 1) + sigma'^{-1} b / T``, unconstrained."""
    merton = np.linalg.solve(m.sigma @ m.sigma.T, m.excess)
    insider = np.linalg.solve(m.sigma.T, m.b) / m.T
    return PortfolioVector(merton + insider)


def mapo_pi_skorokhod(m: MultiAssetParams) -> PortfolioVector:
    """Componentwise indicator of ``sigma_i . b > -(mu_i - r) T``; ties give 0."""
    drive = m.sigma @ m.b
    return PortfolioVector((drive > -m.excess * m.T).astype(np.float64))


def mapo_value(m: MultiAssetParams, scheme: Scheme) -> float:
    scheme = Scheme(scheme)
    if scheme is Scheme.BRIDGE_OR_FORWARD:
        gap = np.linalg.solve(m.sigma, m.excess) + m.b / m.T
        return m.r * m.T + 0.5 * m.T * float(gap @ gap)
    active = mapo_pi_skorokhod(m).pi.astype(bool)
    bracket = m.excess + m.sigma @ m.b / m.T
    return m.r * m.T + m.T * float(bracket[active].sum())


def mapo_partial_info(m: MultiAssetParams, scheme: Scheme) -> tuple[PortfolioVector, float]:
    """Portfolio and value when only masked components carry a terminal signal.

    Bridge / forward: ``pi' = (sigma sigma')^{-1}(mu - r 1) + sigma'^{-1} M b / T``.

    Skorokhod: insider components take the indicator of a positive linear
    coefficient; the remaining components solve the first-order conditions of
    ``J`` with the insider block held fixed.  This is the exact optimum (over
    ``[0, 1]`` for insiders, unconstrained otherwise) when insider assets load
    only on insider Brownian components; otherwise a note is attached.
    """
    scheme = Scheme(scheme)
    mask = m.insider_mask
    if scheme is Scheme.BRIDGE_OR_FORWARD:
        merton = np.linalg.solve(m.sigma @ m.sigma.T, m.excess)
        insider = np.linalg.solve(m.sigma.T, m.masked_b) / m.T
        pi = merton + insider
        gap = np.linalg.solve(m.sigma, m.excess) + m.masked_b / m.T
        return PortfolioVector(pi), m.r * m.T + 0.5 * m.T * float(gap @ gap)

    lin, curv = _coefficients(m, scheme, use_mask=True)
    pi = np.zeros(m.d)
    ins, non = mask, ~mask
    pi[ins] = (lin[ins] * m.T > 0).astype(np.float64)
    notes = []
    if non.any():
        rhs = lin[non] - curv[np.ix_(non, ins)] @ pi[ins]
        pi[non] = np.linalg.solve(curv[np.ix_(non, non)], rhs)
    if ins.any() and non.any() and np.any(m.sigma[np.ix_(ins, non)] != 0):
        notes.append("insider assets load on non-insider noise; closed form is approximate")
    value, _ = objective(m, scheme, pi, use_mask=True)
    return PortfolioVector(pi, notes=tuple(notes)), value * m.T


def project_box(x, lower, upper):
    return np.minimum(np.maximum(x, lower), upper)


def project_simplex_box(x):
    """Euclidean projection onto ``{0 <= x_i <= 1, sum x <= 1}``."""
    y = np.clip(x, 0.0, 1.0)
    if y.sum() <= 1.0:
        return y
    lo, hi = 0.0, float(np.max(x))
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        if np.clip(x - lam, 0.0, 1.0).sum() > 1.0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return np.clip(x - hi, 0.0, 1.0)


CONSTRAINTS = ("none", "box", "simplex-box", "insider-box")


def _projector(m: MultiAssetParams, constraint: str):
    if constraint == "none":
        return lambda x: x
    if constraint == "box":
        return lambda x: np.clip(x, 0.0, 1.0)
    if constraint == "simplex-box":
        return project_simplex_box
    if constraint == "insider-box":
        lower = np.where(m.insider_mask, 0.0, -np.inf)
        upper = np.where(m.insider_mask, 1.0, np.inf)
        return lambda x: project_box(x, lower, upper)
    raise ValueError(f"constraint must be one of {CONSTRAINTS}, got {constraint!r}")


def numeric_maximize_J(
    m: MultiAssetParams,
    scheme: Scheme,
    constraint: str = "none",
    use_mask: bool = False,
    tol: float = 1e-12,
    max_iter: int = 200_000,
    x0=None,
) -> PortfolioVector:
    """Maximize ``J`` by accelerated projected gradient ascent.

    Step ``1/L`` with ``L`` the largest curvature eigenvalue, Nesterov
    momentum, and a restart whenever the objective stops increasing.  Stops
    when the projected-gradient residual ``|x - P(x + g/L)| L`` drops below
    ``tol``; for ``constraint="none"`` this is the gradient norm.
    """
    scheme = Scheme(scheme)
    lin, curv = _coefficients(m, scheme, use_mask)
    project = _projector(m, constraint)
    L = float(np.linalg.eigvalsh(curv).max()) if np.any(curv) else 0.0
    if L <= 0.0:
        if constraint == "none" or (constraint == "insider-box" and not m.insider_mask.all()):
            raise ConvergenceError("objective is unbounded without constraints", math.inf, 0)
        L = 1.0  # affine objective: any fixed step lands on the maximizing vertex
    step = 1.0 / L

    def value(x):
        return lin @ x - 0.5 * x @ curv @ x

    x = project(np.zeros(m.d) if x0 is None else np.asarray(x0, dtype=np.float64))
    y, t = x.copy(), 1.0
    f_x = value(x)
    residual = math.inf
    for it in range(1, max_iter + 1):
        grad = lin - curv @ y
        x_new = project(y + step * grad)
        f_new = value(x_new)
        if f_new < f_x and t > 1.0:
            # restart momentum from the last accepted iterate
            y, t = x.copy(), 1.0
            continue
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t, f_x = x_new, t_new, f_new
        g_x = lin - curv @ x
        residual = float(np.linalg.norm(x - project(x + step * g_x)) * L)
        if residual <= tol:
            return PortfolioVector(x, residual=residual, iterations=it)
    raise ConvergenceError("projected gradient ascent did not converge", residual, max_iter)
