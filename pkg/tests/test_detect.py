import math

import numpy as np
import pytest

from chirpmi.detect import (
    MODE_ANALYTIC,
    CalibrationUnderpoweredError,
    DetectionReport,
    ThresholdPolicy,
    calibrate_threshold,
    confidence,
    detect_peak,
    estimation_risk,
    output_snr,
)
from chirpmi.hough import HoughGrid, ParamPlane
from chirpmi.tfr import PlaneAxes

AXES = PlaneAxes(200, 128, 0.0, 5e-8, 0.0, 10e6 / 127)


def plane_with(values):
    grid = HoughGrid(180, 400)
    full = np.zeros((400, 180))
    for (ri, ti), v in values.items():
        full[ri, ti] = v
    return ParamPlane(values=full, grid=grid, source_axes=AXES)


class TestDetectPeak:
    def test_all_zero_plane(self):
        report = detect_peak(plane_with({}), eta=1.0)
        assert report.detected is False
        assert report.confidence == 0.0

    def test_ratio_arithmetic(self):
        report = detect_peak(plane_with({(200, 90): 4.2}), eta=2.1)
        assert report.detected is True
        assert report.confidence == pytest.approx(2.0, rel=1e-12)
        assert report.peak == pytest.approx(4.2)

    def test_tie_breaks_lexicographic(self):
        report = detect_peak(plane_with({(10, 5): 3.0, (10, 7): 3.0, (40, 2): 3.0}), 1.0)
        grid = HoughGrid(180, 400)
        assert report.rho_hat == pytest.approx(grid.rho_centers()[10])
        assert report.theta_hat == pytest.approx(grid.theta_centers()[5])

    def test_detected_iff_peak_clears_eta(self):
        plane = plane_with({(100, 50): 2.0})
        assert detect_peak(plane, 1.999).detected
        assert not detect_peak(plane, 2.001).detected
        # confidence >= 1 exactly on detections
        assert detect_peak(plane, 1.999).confidence >= 1.0
        assert detect_peak(plane, 2.001).confidence < 1.0

    def test_estimates_from_argmax_bin(self):
        grid = HoughGrid(180, 400)
        report = detect_peak(plane_with({(250, 120): 5.0}), 1.0)
        from chirpmi.hough import line_to_chirp

        f0, g = line_to_chirp(
            grid.rho_centers()[250], grid.theta_centers()[120], AXES
        )
        assert report.f0_hat_hz == pytest.approx(f0)
        assert report.g_hat_hz_per_s == pytest.approx(g)
        assert report.estimation_failed is False

    def test_degenerate_angle_reports_estimation_failed(self, monkeypatch):
        import chirpmi.detect as detect_mod
        from chirpmi.hough import DegenerateAngleError

        def boom(rho, theta, axes):
            raise DegenerateAngleError("forced")

        monkeypatch.setattr(detect_mod.hough, "line_to_chirp", boom)
        report = detect_peak(plane_with({(10, 10): 9.0}), 1.0)
        assert report.detected is True
        assert report.estimation_failed is True
        assert math.isnan(report.f0_hat_hz)

    def test_invalid_eta(self):
        with pytest.raises(ValueError):
            detect_peak(plane_with({(0, 0): 1.0}), 0.0)
        with pytest.raises(ValueError):
            detect_peak(plane_with({(0, 0): 1.0}), float("nan"))


class TestCalibrateThreshold:
    def test_median_at_half_pf(self):
        rng = np.random.default_rng(0)
        draws = rng.standard_exponential(1000)

        policy = ThresholdPolicy(pf=0.5, calibration=1000)
        eta = calibrate_threshold(policy, lambda i: draws[i])
        assert eta == pytest.approx(np.median(draws))

    def test_underpowered_rejected(self):
        policy = ThresholdPolicy(pf=1e-3, calibration=1000)
        with pytest.raises(CalibrationUnderpoweredError):
            calibrate_threshold(policy, lambda i: 0.0)

    def test_false_alarm_rate_on_fresh_draws(self):
        rng = np.random.default_rng(7)
        cal = rng.standard_exponential(1000)
        policy = ThresholdPolicy(pf=1e-2, calibration=1000)
        eta = calibrate_threshold(policy, lambda i: cal[i])
        fresh = rng.standard_exponential(1000)
        rate = np.mean(fresh >= eta)
        assert 0.005 <= rate <= 0.02

    def test_analytic_exponential_plane(self):
        rng = np.random.default_rng(3)
        grid = HoughGrid(100, 100)
        values = rng.standard_exponential((100, 100))
        plane = ParamPlane(values=values, grid=grid, source_axes=AXES)
        policy = ThresholdPolicy(mode=MODE_ANALYTIC, pf=1e-2, calibration=2)
        eta = calibrate_threshold(policy, plane)
        m = 10_000
        pf_cell = 1.0 - (1.0 - 1e-2) ** (1.0 / m)
        # unit-mean exponential: quantile = ln(1/pf_cell) ~= 13.81
        want = math.log(1.0 / pf_cell)
        assert eta == pytest.approx(want, rel=0.02)  # scale is fit from cells

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            ThresholdPolicy(pf=0.0)
        with pytest.raises(ValueError):
            ThresholdPolicy(mode="GUESS")
        with pytest.raises(ValueError):
            ThresholdPolicy(calibration=50)


class TestOutputSnr:
    def test_direct_substitution(self):
        # noise values with population mean 1 and variance 4 exactly
        t_n = np.tile([-1.0, 3.0], 20)
        t_sn = np.full(40, 5.0)
        got = output_snr(t_sn, t_n)
        assert got == pytest.approx(10 * math.log10(16 / 4), abs=1e-9)  # 6.0206

    def test_absent_signal_is_minus_inf(self):
        t_n = np.tile([-1.0, 3.0], 20)
        assert output_snr(t_n, t_n) == float("-inf")

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            output_snr(np.ones(40), np.ones(40))

    def test_too_few_trials_rejected(self):
        with pytest.raises(ValueError):
            output_snr(np.ones(10), np.zeros(10))


class TestEstimationRisk:
    F, G = 5e6, -5e11

    def test_all_missed_hits_floor(self):
        trials = [(False, 0.0, 0.0)] * 20
        df, dg, pd = estimation_risk(trials, self.F, self.G)
        assert df == 10.0 and dg == 10.0 and pd == 0.0

    def test_all_exact(self):
        trials = [(True, self.F, self.G)] * 20
        df, dg, pd = estimation_risk(trials, self.F, self.G)
        assert df == 0.0 and dg == 0.0 and pd == 1.0

    def test_half_detected_two_percent_error(self):
        good = (True, self.F * 1.02, self.G * 1.02)
        miss = (False, 0.0, 0.0)
        df, dg, pd = estimation_risk([good, miss] * 10, self.F, self.G)
        assert pd == 0.5
        assert df == pytest.approx(0.5 * 2.0 + 0.5 * 10.0, rel=1e-9)
        assert dg == pytest.approx(6.0, rel=1e-9)

    def test_gross_errors_reclassified_as_misses(self):
        bad = (True, self.F * 1.5, self.G)  # 50% frequency error
        df, dg, pd = estimation_risk([bad] * 10, self.F, self.G)
        assert pd == 0.0
        assert df == 10.0 and dg == 10.0

    def test_risk_never_exceeds_floor(self):
        rng = np.random.default_rng(5)
        trials = []
        for _ in range(200):
            det = rng.random() < 0.7
            f = self.F * (1 + rng.normal(0, 0.05))
            g = self.G * (1 + rng.normal(0, 0.05))
            trials.append((det, f, g))
        df, dg, _ = estimation_risk(trials, self.F, self.G)
        assert 0.0 <= df <= 10.0 and 0.0 <= dg <= 10.0

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            estimation_risk([(True, 1.0, 1.0)], 0.0, self.G)


class TestConfidence:
    def test_peak_equals_eta(self):
        assert confidence(2.5, 2.5) == 1.0

    def test_zero_peak(self):
        assert confidence(0.0, 3.0) == 0.0

    def test_nonpositive_eta_rejected(self):
        with pytest.raises(ValueError):
            confidence(1.0, 0.0)


class TestReportSerialization:
    def make(self):
        return DetectionReport(
            detected=True,
            rho_hat=0.5,
            theta_hat=1.1,
            f0_hat_hz=5e6,
            g_hat_hz_per_s=-5e11,
            peak=4.2,
            threshold=2.1,
            confidence=2.0,
        )

    def test_keyvalue_lines(self):
        text = self.make().to_keyvalue()
        lines = dict(line.split("=", 1) for line in text.strip().splitlines())
        assert lines["detected"] == "True"
        assert float(lines["peak"]) == 4.2
        assert set(lines) == {
            "detected", "rho_hat", "theta_hat", "f0_hat_hz", "g_hat_hz_per_s",
            "peak", "threshold", "confidence", "estimation_failed",
        }

    def test_json_roundtrip(self):
        import json

        data = json.loads(self.make().to_json())
        assert data["detected"] is True
        assert data["confidence"] == 2.0
