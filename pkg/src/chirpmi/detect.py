"""Peak detection against a Neyman-Pearson threshold, plus the benchmark metrics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import hough
from .hough import DegenerateAngleError, ParamPlane

MODE_CALIBRATED = "CALIBRATED"
MODE_ANALYTIC = "ANALYTIC"


@dataclass(frozen=True)
class ThresholdPolicy:
    """How to pick eta for a target false-alarm probability.

    CALIBRATED runs the full pipeline on noise-only inputs ``calibration``
    times and takes the empirical (1-pf) quantile of the max statistic.
    ANALYTIC fits an exponential tail to non-peak plane cells and applies a
    per-cell Sidak-corrected pf; ``calibration`` is then the half-width of
    the guard window excluded around the peak.
    """

    mode: str = MODE_CALIBRATED
    pf: float = 1e-2
    calibration: int = 1000

    def __post_init__(self):
        if not 0.0 < self.pf < 1.0:
            raise ValueError("pf must be in (0, 1)")
        if self.mode not in (MODE_CALIBRATED, MODE_ANALYTIC):
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if self.mode == MODE_CALIBRATED and self.calibration < 100:
            raise ValueError("CALIBRATED mode needs at least 100 runs")


class CalibrationUnderpoweredError(ValueError):
    """Too few calibration runs to resolve the requested pf."""


@dataclass(frozen=True)
class DetectionReport:
    detected: bool
    rho_hat: float
    theta_hat: float
    f0_hat_hz: float
    g_hat_hz_per_s: float
    peak: float
    threshold: float
    confidence: float
    estimation_failed: bool = False

    def to_keyvalue(self) -> str:
        lines = [f"{k}={v}" for k, v in self._fields().items()]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self._fields(), indent=2) + "\n"

    def _fields(self) -> dict:
        return {
            "detected": self.detected,
            "rho_hat": self.rho_hat,
            "theta_hat": self.theta_hat,
            "f0_hat_hz": self.f0_hat_hz,
            "g_hat_hz_per_s": self.g_hat_hz_per_s,
            "peak": self.peak,
            "threshold": self.threshold,
            "confidence": self.confidence,
            "estimation_failed": self.estimation_failed,
        }


def confidence(peak: float, eta: float) -> float:
    """Peak-to-threshold ratio; >= 1 exactly when the peak clears eta."""
    if eta <= 0:
        raise ValueError("threshold must be positive")
    return peak / eta


def detect_peak(param: ParamPlane, eta: float) -> DetectionReport:
    """Compare the plane's global max against eta and estimate the chirp.

    Ties resolve to the lowest (rho_index, theta_index) in lexicographic
    order. A line too steep to invert leaves NaN estimates but still reports
    the detection verdict.
    """
    if not math.isfinite(eta) or eta <= 0:
        raise ValueError("eta must be finite and positive")
    values = param.values
    flat = int(np.argmax(values))  # first occurrence = lexicographic tiebreak
    rho_i, theta_i = divmod(flat, param.grid.n_theta)
    peak = float(values[rho_i, theta_i])
    rho = float(param.grid.rho_centers()[rho_i])
    theta = float(param.grid.theta_centers()[theta_i])
    failed = False
    try:
        f0_hat, g_hat = hough.line_to_chirp(rho, theta, param.source_axes)
    except DegenerateAngleError:
        f0_hat, g_hat = float("nan"), float("nan")
        failed = True
    return DetectionReport(
        detected=peak >= eta,
        rho_hat=rho,
        theta_hat=theta,
        f0_hat_hz=f0_hat,
        g_hat_hz_per_s=g_hat,
        peak=peak,
        threshold=eta,
        confidence=confidence(peak, eta),
        estimation_failed=failed,
    )


def calibrate_threshold(policy: ThresholdPolicy, null_statistic, master_seed: int = 0):
    """Compute eta for the policy's pf.

    ``null_statistic`` depends on the mode: for CALIBRATED it is a callable
    mapping a trial index to the pipeline's noise-only max statistic (the
    caller derives per-trial seeds from ``master_seed``); for ANALYTIC it is
    the observed ParamPlane itself.
    """
    if policy.mode == MODE_CALIBRATED:
        k = policy.calibration
        if k * policy.pf < 5.0:
            raise CalibrationUnderpoweredError(
                f"{k} runs cannot resolve pf={policy.pf:g} (need K*pf >= 5)"
            )
        maxima = np.array([float(null_statistic(i)) for i in range(k)])
        return float(np.quantile(maxima, 1.0 - policy.pf))
    return _analytic_threshold(policy, null_statistic)


def _analytic_threshold(policy: ThresholdPolicy, param: ParamPlane) -> float:
    """Exponential-tail fit with a Sidak-corrected per-cell pf.

    The per-cell null is modelled as chi-square with two degrees of freedom
    (an exponential); its scale comes from the plane's non-peak cells after
    excluding a guard window around the global max.
    """
    values = param.values
    n_rho, n_theta = values.shape
    guard = int(policy.calibration)
    flat = int(np.argmax(values))
    ri, ti = divmod(flat, n_theta)
    mask = np.ones_like(values, dtype=bool)
    mask[
        max(0, ri - guard) : ri + guard + 1, max(0, ti - guard) : ti + guard + 1
    ] = False
    cells = values[mask]
    cells = cells[cells > 0]
    if len(cells) == 0:
        raise ValueError("no positive non-peak cells to fit the null model")
    scale = float(np.mean(cells))
    m = values.size
    pf_cell = 1.0 - (1.0 - policy.pf) ** (1.0 / m)
    return scale * math.log(1.0 / pf_cell)


def output_snr(t_signal_noise, t_noise_only) -> float:
    """Paired-trial output SNR at the true bin, in dB.

    10*log10(|mean(T_s+n) - mean(T_n)|^2 / var(T_n)) over trials that share
    noise realizations. A vanished numerator reports -inf.
    """
    t_sn = np.asarray(t_signal_noise, dtype=float)
    t_n = np.asarray(t_noise_only, dtype=float)
    if len(t_sn) != len(t_n) or len(t_sn) < 30:
        raise ValueError("need >= 30 paired trials")
    var_n = float(np.var(t_n))
    if var_n == 0.0:
        raise ValueError("undefined metric: noise-only values have zero variance")
    num = abs(float(np.mean(t_sn)) - float(np.mean(t_n))) ** 2
    if num == 0.0:
        return float("-inf")
    return 10.0 * math.log10(num / var_n)


RISK_FLOOR = 0.10  # missed detections are charged a 10% parameter error


def estimation_risk(trials, f0_true: float, g_true: float):
    """Expected relative parameter error with the missed-detection floor.

    ``trials`` is an iterable of (detected, f0_hat, g_hat). Detections whose
    relative error on either parameter exceeds the floor are reclassified as
    misses before P_d is computed. Returns (delta_f_pct, delta_g_pct, p_d).
    """
    if f0_true == 0 or g_true == 0:
        raise ValueError("true parameters must be nonzero")
    trials = list(trials)
    if not trials:
        raise ValueError("need at least one trial")
    err_f, err_g = [], []
    for detected, f0_hat, g_hat in trials:
        if not detected or not (math.isfinite(f0_hat) and math.isfinite(g_hat)):
            continue
        ef = abs(f0_true - f0_hat) / abs(f0_true)
        eg = abs(g_true - g_hat) / abs(g_true)
        if ef <= RISK_FLOOR and eg <= RISK_FLOOR:
            err_f.append(ef)
            err_g.append(eg)
    p_d = len(err_f) / len(trials)
    mean_f = float(np.mean(err_f)) if err_f else 0.0
    mean_g = float(np.mean(err_g)) if err_g else 0.0
    delta_f = (p_d * mean_f + (1.0 - p_d) * RISK_FLOOR) * 100.0
    delta_g = (p_d * mean_g + (1.0 - p_d) * RISK_FLOOR) * 100.0
    return delta_f, delta_g, p_d
