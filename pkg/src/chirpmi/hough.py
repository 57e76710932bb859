"""Line-feature extraction between a TF plane and the (rho, theta) plane.

Cells vote on normalized unit-square coordinates; a mapping set is defined as
the exact preimage of a vote target, and both directions of set statistics are
computed from the same vote table so the sum/set identity holds by
construction, not approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import gather_sums_sq, vote_sums, vote_sums_sq
from .tfr import PlaneAxes, TfPlane

RHO_MAX = math.sqrt(2.0)


class DegenerateAngleError(ValueError):
    """Line too close to vertical to express as a finite-rate chirp."""


@dataclass(frozen=True)
class HoughGrid:
    """Uniform accumulator bins: theta over [0, pi), rho over [-sqrt2, sqrt2]."""

    n_theta: int = 180
    n_rho: int = 400

    def __post_init__(self):
        if self.n_theta < 30 or self.n_rho < 30:
            raise ValueError("need n_theta >= 30 and n_rho >= 30")

    @property
    def d_theta(self) -> float:
        return math.pi / self.n_theta

    @property
    def d_rho(self) -> float:
        return 2.0 * RHO_MAX / self.n_rho

    def theta_centers(self) -> np.ndarray:
        # Centers at (j + 0.5)*pi/n so theta = 0 is never representable.
        return (np.arange(self.n_theta) + 0.5) * self.d_theta

    def rho_centers(self) -> np.ndarray:
        return -RHO_MAX + (np.arange(self.n_rho) + 0.5) * self.d_rho

    def rho_to_bin(self, rho) -> np.ndarray:
        idx = np.floor((np.asarray(rho) + RHO_MAX) / self.d_rho).astype(np.int64)
        return np.clip(idx, 0, self.n_rho - 1)


def default_grid(plane: TfPlane) -> HoughGrid:
    return HoughGrid(n_theta=180, n_rho=2 * max(plane.n_time, plane.n_freq))


@dataclass(frozen=True)
class ParamPlane:
    values: np.ndarray  # (n_rho, n_theta), float64
    grid: HoughGrid
    source_axes: PlaneAxes

    def __post_init__(self):
        if self.values.shape != (self.grid.n_rho, self.grid.n_theta):
            raise ValueError("values shape disagrees with grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("parameter plane values must be finite")


@dataclass(frozen=True)
class MappingSetStats:
    """Per-target-cell member count, mean and population std of one direction."""

    count: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def normalize_axes(n_time: int, n_freq: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-square cell coordinates: x = ti/(Nt-1), y = fi/(Nf-1)."""
    if n_time < 2 or n_freq < 2:
        raise ValueError("degenerate axis: need at least 2 cells per axis")
    x = np.arange(n_time) / (n_time - 1)
    y = np.arange(n_freq) / (n_freq - 1)
    return x, y


class _VoteTable:
    """rho bin per (theta, cell) for one plane shape; cells in C order."""

    def __init__(self, n_time: int, n_freq: int, grid: HoughGrid):
        x, y = normalize_axes(n_time, n_freq)
        theta = grid.theta_centers()
        # rho(theta_j; cell) = x*cos + y*sin, cell index = ti*n_freq + fi
        rho = (
            np.cos(theta)[:, None, None] * x[None, :, None]
            + np.sin(theta)[:, None, None] * y[None, None, :]
        ).reshape(grid.n_theta, n_time * n_freq)
        self.rho_idx = grid.rho_to_bin(rho).astype(np.int32)
        self.grid = grid
        self.counts = np.empty((grid.n_rho, grid.n_theta), dtype=np.int64)
        for j in range(grid.n_theta):
            self.counts[:, j] = np.bincount(self.rho_idx[j], minlength=grid.n_rho)

    def accumulate(self, flat: np.ndarray, squared: bool) -> tuple:
        """Per-bin sum of member values and (optionally) their squares."""
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if squared:
            sums, sumsq = vote_sums_sq(self.rho_idx, flat, self.grid.n_rho)
            return sums.T.copy(), sumsq.T.copy()
        return vote_sums(self.rho_idx, flat, self.grid.n_rho).T.copy(), None


_TABLE_CACHE: dict = {}


def _vote_table(n_time: int, n_freq: int, grid: HoughGrid) -> _VoteTable:
    key = (n_time, n_freq, grid)
    table = _TABLE_CACHE.get(key)
    if table is None:
        if len(_TABLE_CACHE) >= 8:
            _TABLE_CACHE.pop(next(iter(_TABLE_CACHE)))
        table = _VoteTable(n_time, n_freq, grid)
        _TABLE_CACHE[key] = table
    return table


def hough_forward(plane: TfPlane, grid: HoughGrid | None = None) -> ParamPlane:
    """Accumulate every cell's value into its rho bin at every theta."""
    if grid is None:
        grid = default_grid(plane)
    table = _vote_table(plane.n_time, plane.n_freq, grid)
    sums, _ = table.accumulate(plane.values.ravel(), squared=False)
    return ParamPlane(values=sums, grid=grid, source_axes=plane.axes)


def param_mapping_stats(plane: TfPlane, grid: HoughGrid | None = None) -> MappingSetStats:
    """Stats of each (rho, theta) bin's vote preimage in the TF plane."""
    if grid is None:
        grid = default_grid(plane)
    table = _vote_table(plane.n_time, plane.n_freq, grid)
    sums, sumsq = table.accumulate(plane.values.ravel(), squared=True)
    count = table.counts
    populated = count > 0
    mean = np.zeros_like(sums)
    np.divide(sums, count, out=mean, where=populated)
    var = np.zeros_like(sums)
    np.divide(sumsq, count, out=var, where=populated)
    var -= mean * mean
    np.clip(var, 0.0, None, out=var)
    return MappingSetStats(count=count, mean=mean, std=np.sqrt(var))


def tf_mapping_stats(param: ParamPlane) -> MappingSetStats:
    """Stats of each TF cell's n_theta vote targets in the parameter plane."""
    axes = param.source_axes
    grid = param.grid
    table = _vote_table(axes.n_time, axes.n_freq, grid)
    param_by_theta = np.ascontiguousarray(param.values.T)
    s1, s2 = gather_sums_sq(table.rho_idx, param_by_theta)
    shape = (axes.n_time, axes.n_freq)
    mean = (s1 / grid.n_theta).reshape(shape)
    var = (s2 / grid.n_theta).reshape(shape) - mean * mean
    np.clip(var, 0.0, None, out=var)
    count = np.full(shape, grid.n_theta, dtype=np.int64)
    return MappingSetStats(count=count, mean=mean, std=np.sqrt(var))


def line_to_chirp(rho: float, theta: float, axes: PlaneAxes) -> tuple[float, float]:
    """Map a unit-square line rho = x cos(theta) + y sin(theta) back to (f0, g).

    The line reads y(x) = rho/sin(theta) - x*cot(theta), so the start frequency
    comes from y(0) and the sweep rate from the slope rescaled to physical
    axis spans.
    """
    sin_t = math.sin(theta)
    if abs(sin_t) < 1e-9 or not 0.0 < theta < math.pi:
        raise DegenerateAngleError(f"theta={theta!r} maps to a vertical line")
    y0 = rho / sin_t
    slope = -math.cos(theta) / sin_t
    f0 = axes.f0_hz + y0 * axes.f_span_hz
    g = slope * axes.f_span_hz / axes.t_span_s
    return f0, g


def chirp_to_line(
    f0_hz: float, g_hz_per_s: float, axes: PlaneAxes, grid: HoughGrid
) -> tuple[int, int]:
    """Nearest (rho_bin, theta_bin) for the line traced by a chirp."""
    slope = g_hz_per_s * axes.t_span_s / axes.f_span_hz
    theta = math.atan2(1.0, -slope)  # in (0, pi) since sin(theta) > 0
    y0 = (f0_hz - axes.f0_hz) / axes.f_span_hz
    rho = y0 * math.sin(theta)
    if not -RHO_MAX <= rho <= RHO_MAX:
        raise ValueError(f"line rho={rho:g} falls outside [-sqrt2, sqrt2]")
    theta_idx = int(np.clip(round(theta / grid.d_theta - 0.5), 0, grid.n_theta - 1))
    rho_idx = int(grid.rho_to_bin(rho))
    return rho_idx, theta_idx


def write_param_csv(param: ParamPlane, path) -> None:
    g = param.grid
    header = (
        f"# hough,{g.n_rho},{g.n_theta},"
        f"{float(g.rho_centers()[0])!r},{g.d_rho!r},"
        f"{float(g.theta_centers()[0])!r},{g.d_theta!r}"
    )
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in param.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
