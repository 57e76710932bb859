"""Mapping-set weights and the bidirectional re-weighting iteration.

The parameter plane gets a negentropy-style weight (small member spread and a
healthy member count mean a line-like set); the TF plane gets a cross-entropy
weight (a member set straddling a strong impulse has a large spread). Each
applied weight is followed by a scale-only standardization so the iteration
operates at a fixed scale regardless of the input's units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .hough import HoughGrid, MappingSetStats, ParamPlane, param_mapping_stats, tf_mapping_stats
from .tfr import TfPlane

SQRT_2PI = math.sqrt(2.0 * math.pi)

TAG_NEGENTROPY_PARAM = "NEGENTROPY_PARAM"
TAG_CROSSENT_TF = "CROSSENT_TF"
TAG_CUSTOM = "CUSTOM"


def weight_negentropy(count, std, sigma_floor: float = 1e-12):
    """log(1 + l / (sqrt(2*pi) * sigma)), empty sets 0, degenerate sets capped.

    Degenerate spreads (std <= sigma_floor) evaluate at the floor, and every
    such set shares the single configured cap so constant fixtures weight all
    populated bins identically.
    """
    if sigma_floor <= 0:
        raise ValueError("sigma_floor must be positive")
    count = np.asarray(count, dtype=float)
    std = np.asarray(std, dtype=float)
    cap = math.log1p(1.0 / (SQRT_2PI * sigma_floor))
    w = np.log1p(count / (SQRT_2PI * np.maximum(std, sigma_floor)))
    w = np.minimum(w, cap)
    return np.where(count > 0, w, 0.0)


def negentropy_cap(sigma_floor: float = 1e-12) -> float:
    """The shared weight assigned to degenerate (zero-spread) mapping sets."""
    return math.log1p(1.0 / (SQRT_2PI * sigma_floor))


def weight_crossentropy(count, std):
    """sqrt(2*pi)*sigma/l + log(l) + sigma/(6*l); requires nonempty sets."""
    count = np.asarray(count, dtype=float)
    std = np.asarray(std, dtype=float)
    if np.any(count < 1):
        raise ValueError("cross-entropy weight needs every mapping set nonempty")
    return SQRT_2PI * std / count + np.log(count) + std / (6.0 * count)


@dataclass(frozen=True)
class WeightMatrix:
    values: np.ndarray
    criterion_tag: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("weights must be finite and nonnegative")


def _plane_sigma_floor(values: np.ndarray) -> float:
    rms = float(np.sqrt(np.mean(values**2)))
    return 1e-12 * rms if rms > 0 else 1e-12


def _max_normalize(w: np.ndarray) -> np.ndarray:
    peak = w.max()
    return w / peak if peak > 0 else w


def build_param_weights(
    plane: TfPlane, grid: HoughGrid, criterion=None, _stats: MappingSetStats | None = None
) -> WeightMatrix:
    """Per-(rho, theta) weight from that bin's vote-preimage statistics."""
    stats = _stats if _stats is not None else param_mapping_stats(plane, grid)
    if criterion is None:
        w = weight_negentropy(
            stats.count, stats.std, sigma_floor=_plane_sigma_floor(plane.values)
        )
        tag = TAG_NEGENTROPY_PARAM
    else:
        w = np.asarray(criterion(stats), dtype=float)
        tag = TAG_CUSTOM
    return WeightMatrix(values=_max_normalize(w), criterion_tag=tag)


def build_tf_weights(param: ParamPlane, criterion=None) -> WeightMatrix:
    """Per-(t, f) weight from the statistics of the cell's vote targets.

    The default criterion carries a spread-independent offset of exactly
    ln(n_theta) (every TF cell's set has l = n_theta members), which would cap
    the normalized matrix's dynamic range at ln(l)/(ln(l) + spread-term) and
    render the weighting numerically inert on unit-std planes. The offset is
    therefore removed before max-normalization: what gets normalized is each
    cell's weight relative to the zero-spread baseline a constant parameter
    plane would produce. A spread-free (constant) weight field normalizes to
    all ones.
    """
    stats = tf_mapping_stats(param)
    if criterion is None:
        w = weight_crossentropy(stats.count, stats.std) - np.log(stats.count)
        peak = w.max()
        # an all-baseline field (constant parameter plane) carries no
        # information: weighting degrades to the identity
        norm = w / peak if peak > 0 else np.ones_like(w)
        return WeightMatrix(values=norm, criterion_tag=TAG_CROSSENT_TF)
    w = np.asarray(criterion(stats), dtype=float)
    return WeightMatrix(values=_max_normalize(w), criterion_tag=TAG_CUSTOM)


def apply_and_standardize(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Cellwise product rescaled to unit global std (scale only, no centering)."""
    if values.shape != weights.shape:
        raise ValueError(f"shape mismatch: {values.shape} vs {weights.shape}")
    product = values * weights
    sd = float(product.std())
    return product / sd if sd > 0 else product


def to_probability(values: np.ndarray) -> np.ndarray:
    """Clamp negatives and normalize to a unit-sum grid."""
    clipped = np.clip(values, 0.0, None)
    total = clipped.sum()
    if total <= 0:
        raise ValueError("cannot normalize an all-zero plane")
    return clipped / total


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration weight matrices, plus plane snapshots when requested."""

    param_weights: list
    tf_weights: list
    param_planes: list | None = None
    tf_planes: list | None = None

    def __len__(self) -> int:
        return len(self.param_weights)


@dataclass(frozen=True)
class MIResult:
    tf_plane: TfPlane
    param_plane: ParamPlane
    trace: IterationTrace


def iterate_mi(
    tf0: TfPlane,
    grid: HoughGrid,
    order: int,
    param_criterion=None,
    tf_criterion=None,
    keep_planes: bool = False,
) -> MIResult:
    """Alternate weighting of the parameter and TF planes ``order`` times.

    Order 0 is the plain transform. Otherwise the TF plane is standardized
    once on entry (so results are scale covariant) and each iteration: builds
    the parameter weights from the current TF plane, applies them to its fresh
    transform, builds the TF weights from that weighted parameter plane, and
    applies them back to the TF plane.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    from .hough import hough_forward  # local import avoids cycle at module load

    if order == 0:
        return MIResult(
            tf_plane=tf0,
            param_plane=hough_forward(tf0, grid),
            trace=IterationTrace([], [], [] if keep_planes else None,
                                 [] if keep_planes else None),
        )

    d_values = tf0.values
    sd = float(d_values.std())
    if sd > 0:
        d_values = d_values / sd
    d_plane = replace(tf0, values=d_values)

    param_weights, tf_weights = [], []
    param_planes = [] if keep_planes else None
    tf_planes = [] if keep_planes else None
    t_plane = None
    for _ in range(order):
        stats_p = param_mapping_stats(d_plane, grid)
        t_raw = stats_p.count * stats_p.mean  # == hough_forward, same pass
        w_p = build_param_weights(d_plane, grid, param_criterion, _stats=stats_p)
        t_values = apply_and_standardize(t_raw, w_p.values)
        t_plane = ParamPlane(values=t_values, grid=grid, source_axes=d_plane.axes)
        w_tf = build_tf_weights(t_plane, tf_criterion)
        d_plane = replace(
            d_plane, values=apply_and_standardize(d_plane.values, w_tf.values)
        )
        param_weights.append(w_p.values)
        tf_weights.append(w_tf.values)
        if keep_planes:
            param_planes.append(t_values)
            tf_planes.append(d_plane.values)
    return MIResult(
        tf_plane=d_plane,
        param_plane=t_plane,
        trace=IterationTrace(param_weights, tf_weights, param_planes, tf_planes),
    )


def dump_trace(trace: IterationTrace, directory) -> list:
    """Write per-iteration weight matrices as w_param_<i>.csv / w_tf_<i>.csv."""
    import os

    paths = []
    for i, (wp, wtf) in enumerate(zip(trace.param_weights, trace.tf_weights), start=1):
        for tag, mat in (("param", wp), ("tf", wtf)):
            path = os.path.join(str(directory), f"w_{tag}_{i}.csv")
            with open(path, "w") as fh:
                for row in mat:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
            paths.append(path)
    return paths


def weight_delta_summary(trace: IterationTrace, designated_bin=None, side: str = "param"):
    """Between-iteration weight changes: max, median, and one designated bin.

    Entry i describes the change from iteration i to i+1 (1-based), so a
    length-n trace yields n-1 entries.
    """
    mats = trace.param_weights if side == "param" else trace.tf_weights
    if len(mats) < 2:
        raise ValueError("need a trace of at least 2 iterations")
    out = []
    for i in range(1, len(mats)):
        delta = mats[i] - mats[i - 1]
        entry = {
            "iteration": i + 1,
            "max_abs": float(np.max(np.abs(delta))),
            "median_abs": float(np.median(np.abs(delta))),
        }
        if designated_bin is not None:
            entry["at_bin"] = float(delta[designated_bin])
        out.append(entry)
    return out
