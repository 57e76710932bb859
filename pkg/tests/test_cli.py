import json
import os

import pytest

from chirpmi.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestSynth:
    def test_writes_iq(self, tmp_path, capsys):
        out = tmp_path / "clean.iq"
        code, _, _ = run(
            ["synth", "--snr", "none", "--seed", "1", "--out", str(out)], capsys
        )
        assert code == 0
        from chirpmi.signals import read_iq

        sig = read_iq(out)
        assert len(sig) == 200
        assert sig.sample_rate_hz == 20e6

    def test_noisy_synth_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.iq", tmp_path / "b.iq"
        run(["synth", "--snr", "-5", "--seed", "42", "--out", str(a)], capsys)
        run(["synth", "--snr", "-5", "--seed", "42", "--out", str(b)], capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_spec_is_runtime_error(self, tmp_path, capsys):
        code, _, err = run(
            ["synth", "--f0", "99e6", "--out", str(tmp_path / "x.iq")], capsys
        )
        assert code == 2
        assert "error" in err


class TestTfr:
    def test_wvd_csv(self, tmp_path, capsys):
        iq = tmp_path / "c.iq"
        run(["synth", "--snr", "none", "--out", str(iq)], capsys)
        out = tmp_path / "plane.csv"
        code, _, _ = run(
            ["tfr", "--method", "wht", "--nf", "32", "--in", str(iq), "--out", str(out)],
            capsys,
        )
        assert code == 0
        from chirpmi.tfr import read_plane_csv

        plane = read_plane_csv(out)
        assert plane.values.shape == (200, 32)
        assert plane.method_tag == "WVD"

    def test_fsst_csv(self, tmp_path, capsys):
        iq = tmp_path / "c.iq"
        run(["synth", "--snr", "none", "--out", str(iq)], capsys)
        out = tmp_path / "plane.csv"
        code, _, _ = run(
            ["tfr", "--method", "fssht", "--n-fft", "128", "--in", str(iq),
             "--out", str(out)],
            capsys,
        )
        assert code == 0
        from chirpmi.tfr import read_plane_csv

        assert read_plane_csv(out).method_tag == "FSST"


class TestDetect:
    def test_noiseless_chirp_detected_order0(self, tmp_path, capsys):
        iq = tmp_path / "clean.iq"
        run(["synth", "--snr", "none", "--out", str(iq)], capsys)
        code, out, _ = run(
            [
                "detect", "--method", "wht", "--order", "0", "--pf", "1e-3",
                "--nf", "32", "--n-theta", "45", "--n-rho", "90",
                "--in", str(iq),
            ],
            capsys,
        )
        assert code == 0
        fields = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert fields["detected"] == "True"
        assert abs(float(fields["f0_hat_hz"]) - 5e6) / 5e6 < 0.1
        assert abs(float(fields["g_hat_hz_per_s"]) - (-5e11)) / 5e11 < 0.1

    def test_json_format_analytic_mode(self, tmp_path, capsys):
        iq = tmp_path / "clean.iq"
        run(["synth", "--snr", "none", "--out", str(iq)], capsys)
        code, out, _ = run(
            [
                "detect", "--method", "wht", "--order", "1", "--pf", "1e-2",
                "--threshold-mode", "analytic", "--nf", "32",
                "--n-theta", "45", "--n-rho", "90", "--format", "json",
                "--in", str(iq),
            ],
            capsys,
        )
        assert code == 0
        report = json.loads(out)
        assert report["detected"] is True
        assert report["confidence"] >= 1.0

    def test_missing_file_is_runtime_error(self, capsys):
        code, _, err = run(
            ["detect", "--method", "wht", "--in", "/nonexistent.iq"], capsys
        )
        assert code == 2


class TestBenchAndReport:
    def test_bench_from_config(self, tmp_path, capsys):
        cfg = tmp_path / "tiny.cfg"
        cfg.write_text(
            "method = wht\n"
            "snr_db = none, 0\n"
            "orders = 0, 1\n"
            "trials = 30\n"
            "pf = 1e-2\n"
            "grid.n_theta = 60\n"
            "grid.n_rho = 120\n"
            "wvd.n_freq_bins = 32\n"
            "threshold.calibration_runs = 500\n"
        )
        out = tmp_path / "result.csv"
        code, stdout, _ = run(
            ["bench", "--config", str(cfg), "--out", str(out),
             "--plot-metrics", "pd"],
            capsys,
        )
        assert code == 0
        assert out.exists()
        assert (tmp_path / "result.csv.summary.txt").exists()
        assert (tmp_path / "result.csv.pd.csv").exists()
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 4  # 2 snrs x 2 orders

        code, summary, _ = run(["report", "--in", str(out)], capsys)
        assert code == 0
        assert "order 1" in summary

    def test_bad_config_is_runtime_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("mystery = 1\n")
        code, _, err = run(
            ["bench", "--config", str(cfg), "--out", str(tmp_path / "r.csv")], capsys
        )
        assert code == 2


class TestUsageErrors:
    def test_unknown_flag_exits_one(self, capsys):
        assert main(["synth", "--frequency", "1"]) == 1

    def test_unknown_command_exits_one(self, capsys):
        assert main(["transmogrify"]) == 1

    def test_missing_required_exits_one(self, capsys):
        assert main(["synth"]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
