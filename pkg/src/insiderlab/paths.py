"""Brownian motion and generalized Brownian bridge paths.

Every random draw goes through :func:`path_stream`, which keys a Philox
counter-based generator on ``(master_seed, path_index)``.  A path therefore
depends only on its own index, so splitting work across threads or chunks
never changes the numbers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.special import ndtri

_HALF_ULP = 2.0**-54


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k * T / n_steps`` on ``[0, T]``."""

    T: float
    n_steps: int

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon T must be positive and finite, got {self.T}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> NDArray[np.float64]:
        t = np.arange(self.n_steps + 1, dtype=np.float64) * self.dt
        t[-1] = self.T
        return t


@dataclass(frozen=True)
class SamplePath:
    grid: TimeGrid
    values: NDArray[np.float64]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.n_steps + 1,):
            raise ValueError(
                f"path has {values.shape} values, grid needs {self.grid.n_steps + 1}"
            )
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> NDArray[np.float64]:
        return self.grid.times

    def to_csv(self, path: str | Path) -> None:
        """Write ``t,value`` rows with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "value"])
            for t, v in zip(self.times, self.values):
                writer.writerow([f"{t:.17g}", f"{v:.17g}"])


@dataclass(frozen=True)
class BridgeSpec:
    """Brownian motion pinned at ``B_0 = 0`` and ``B_T = b``."""

    b: float
    T: float

    def __post_init__(self):
        if not np.isfinite(self.b):
            raise ValueError(f"terminal value b must be finite, got {self.b}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon T must be positive and finite, got {self.T}")


def path_stream(seed: int, path_index: int = 0) -> np.random.Generator:
    """Independent generator for one path, keyed on ``(seed, path_index)``."""
    key = np.array([seed, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normals(seed: int, path_index: int, n: int) -> NDArray[np.float64]:
    """``n`` N(0,1) draws by inverse CDF of open-interval uniforms."""
    u = path_stream(seed, path_index).random(n)
    u += _HALF_ULP
    return ndtri(u)


def normal_block(seed: int, start: int, n_paths: int, n: int) -> NDArray[np.float64]:
    """Rows ``start .. start+n_paths-1`` of the per-path normal streams."""
    out = np.empty((n_paths, n), dtype=np.float64)
    for i in range(n_paths):
        out[i] = standard_normals(seed, start + i, n)
    return out


def _check_horizon(grid: TimeGrid, T: float) -> None:
    if not np.isclose(grid.T, T, rtol=1e-14, atol=0.0):
        raise ValueError(f"grid horizon {grid.T} does not match bridge horizon {T}")


def brownian_from_normals(grid: TimeGrid, z: NDArray[np.float64]) -> NDArray[np.float64]:
    """Cumulate N(0,1) increments (last axis) into Brownian values starting at 0."""
    z = np.asarray(z, dtype=np.float64)
    shape = z.shape[:-1] + (grid.n_steps + 1,)
    w = np.zeros(shape)
    np.cumsum(z * np.sqrt(grid.dt), axis=-1, out=w[..., 1:])
    return w


def sample_brownian(grid: TimeGrid, seed: int, path_index: int = 0) -> SamplePath:
    z = standard_normals(seed, path_index, grid.n_steps)
    return SamplePath(grid, brownian_from_normals(grid, z))


def bridge_values_from_brownian(
    grid: TimeGrid, w: NDArray[np.float64], spec: BridgeSpec
) -> NDArray[np.float64]:
    """Array form of :func:`bridge_from_brownian`; works row-wise on 2-D input."""
    _check_horizon(grid, spec.T)
    w = np.asarray(w, dtype=np.float64)
    frac = grid.times / grid.T
    w_T = w[..., -1:]
    out = w - (w_T - spec.b) * frac
    out[..., 0] = 0.0
    out[..., -1] = spec.b
    return out


def bridge_from_brownian(w: SamplePath, spec: BridgeSpec) -> SamplePath:
    """Pin a Brownian path at ``b`` via ``W_t - (W_T - b) t / T``."""
    return SamplePath(w.grid, bridge_values_from_brownian(w.grid, w.values, spec))


def bridge_values_sequential(
    grid: TimeGrid, z: NDArray[np.float64], spec: BridgeSpec
) -> NDArray[np.float64]:
    """Left-to-right conditional sampling of a bridge from N(0,1) draws.

    Each new point ``s = t_k`` is drawn from its conditional law given the
    previous point ``u = t_{k-1}`` and the pinned endpoint ``(T, b)``:
    mean ``((T-s) B(u) + (s-u) b) / (T-u)``, variance ``(s-u)(T-s)/(T-u)``.
    The last row of ``z`` is unused because the endpoint is fixed.
    """
    _check_horizon(grid, spec.T)
    z = np.asarray(z, dtype=np.float64)
    t = grid.times
    T = grid.T
    out = np.zeros(z.shape[:-1] + (grid.n_steps + 1,))
    prev = out[..., 0]
    for k in range(1, grid.n_steps):
        u, s = t[k - 1], t[k]
        span = T - u
        mean = ((T - s) * prev + (s - u) * spec.b) / span
        std = np.sqrt((s - u) * (T - s) / span)
        prev = mean + std * z[..., k - 1]
        out[..., k] = prev
    out[..., -1] = spec.b
    return out


def sample_bridge_sequential(
    spec: BridgeSpec,
    grid: TimeGrid,
    seed: int,
    path_index: int = 0,
    normals: NDArray[np.float64] | None = None,
) -> SamplePath:
    """Sample one bridge path; ``normals`` overrides the seeded stream."""
    z = standard_normals(seed, path_index, grid.n_steps) if normals is None else normals
    return SamplePath(grid, bridge_values_sequential(grid, z, spec))


def sample_paths(
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    spec: BridgeSpec | None = None,
    method: str = "sequential",
    start: int = 0,
) -> NDArray[np.float64]:
    """Matrix of paths, one row per path index ``start .. start+n_paths-1``.

    With ``spec=None`` the rows are standard Brownian motions.  Otherwise
    ``method`` picks the bridge construction: ``"sequential"`` (conditional
    recursion) or ``"brownian"`` (pinning a Brownian path).
    """
    z = normal_block(seed, start, n_paths, grid.n_steps)
    if spec is None:
        return brownian_from_normals(grid, z)
    if method == "sequential":
        return bridge_values_sequential(grid, z, spec)
    if method == "brownian":
        return bridge_values_from_brownian(grid, brownian_from_normals(grid, z), spec)
    raise ValueError(f"unknown bridge method {method!r}")


def _check_time(t, T):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > T):
        raise ValueError(f"time outside [0, {T}]")
    return t


def bridge_mean(t, spec: BridgeSpec):
    """Mean ``b t / T`` of the bridge at time ``t``."""
    t = _check_time(t, spec.T)
    return spec.b * t / spec.T


def bridge_cov(s, t, spec: BridgeSpec):
    """Covariance ``s (1 - t/T)`` for ``0 <= s <= t <= T``."""
    s = _check_time(s, spec.T)
    t = _check_time(t, spec.T)
    if np.any(s > t):
        raise ValueError("bridge_cov needs s <= t")
    return s * (1.0 - t / spec.T)


def paths_to_csv(grid: TimeGrid, paths: NDArray[np.float64], path: str | Path) -> None:
    """Write several paths as ``t,path_0,path_1,...`` columns."""
    paths = np.atleast_2d(paths)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"path_{i}" for i in range(paths.shape[0])])
        for k, t in enumerate(grid.times):
            writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in paths[:, k]])
