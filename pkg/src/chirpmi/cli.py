"""Command-line front end: synth, tfr, detect, bench, report."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .bench import (
    METHOD_FSSHT,
    METHOD_WHT,
    BenchConfig,
    _stat_planes,
    load_config,
    run_bench,
    summarize,
    write_plot_data,
    write_report,
)
from .detect import MODE_ANALYTIC, MODE_CALIBRATED, ThresholdPolicy, calibrate_threshold, detect_peak
from .signals import (
    ChirpSpec,
    ComplexSignal,
    add_awgn,
    noise_only,
    read_iq,
    synth_chirp,
    write_iq,
)
from .tfr import WindowSpec, fsst, write_plane_csv, wvd


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chirpmi",
        description="Chirp detection with mapping-information re-weighting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="synthesize a chirp IQ file")
    p_synth.add_argument("--f0", type=float, default=5e6, help="start frequency, Hz")
    p_synth.add_argument("--rate", type=float, default=-5e11, help="sweep rate, Hz/s")
    p_synth.add_argument("--amplitude", type=float, default=1.0)
    p_synth.add_argument("--duration", type=float, default=10e-6, help="seconds")
    p_synth.add_argument("--fs", type=float, default=20e6, help="sample rate, Hz")
    p_synth.add_argument("--snr", default=None,
                         help="SNR in dB, or 'none' for a clean signal")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)

    p_tfr = sub.add_parser("tfr", help="transform an IQ file to a plane CSV")
    p_tfr.add_argument("--method", choices=[METHOD_WHT, METHOD_FSSHT],
                       default=METHOD_WHT)
    p_tfr.add_argument("--nf", type=int, default=128, help="WVD frequency bins")
    p_tfr.add_argument("--window", type=int, default=63, help="FSST window length")
    p_tfr.add_argument("--n-fft", type=int, default=256, help="FSST FFT length")
    p_tfr.add_argument("--in", dest="infile", required=True)
    p_tfr.add_argument("--out", required=True)

    p_det = sub.add_parser("detect", help="detect a chirp in an IQ file")
    p_det.add_argument("--method", choices=[METHOD_WHT, METHOD_FSSHT],
                       default=METHOD_WHT)
    p_det.add_argument("--order", type=int, default=1)
    p_det.add_argument("--pf", type=float, default=1e-3)
    p_det.add_argument("--seed", type=int, default=0, help="calibration seed")
    p_det.add_argument("--threshold-mode",
                       choices=["calibrated", "analytic"], default="calibrated")
    p_det.add_argument("--calibration", type=int, default=0,
                       help="noise-only runs; 0 picks ceil(5/pf)")
    p_det.add_argument("--n-theta", type=int, default=270)
    p_det.add_argument("--n-rho", type=int, default=400)
    p_det.add_argument("--nf", type=int, default=128)
    p_det.add_argument("--window", type=int, default=63)
    p_det.add_argument("--n-fft", type=int, default=256)
    p_det.add_argument("--format", choices=["kv", "json"], default="kv")
    p_det.add_argument("--in", dest="infile", required=True)

    p_bench = sub.add_parser("bench", help="run a Monte Carlo sweep from a config")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", required=True, help="result CSV path")
    p_bench.add_argument("--plot-metrics", default="",
                         help="comma list of series CSVs to emit next to --out")

    p_rep = sub.add_parser("report", help="summarize a bench result CSV")
    p_rep.add_argument("--in", dest="infile", required=True)
    return parser


def _cmd_synth(args) -> int:
    snr = None if args.snr in (None, "none", "no-noise") else float(args.snr)
    spec = ChirpSpec(args.f0, args.rate, args.amplitude, args.duration)
    sig = synth_chirp(spec, args.fs)
    sig = add_awgn(sig, snr, args.seed)
    write_iq(args.out, sig)
    print(f"wrote {len(sig)} samples to {args.out}")
    return 0


def _cmd_tfr(args) -> int:
    sig = read_iq(args.infile)
    if args.method == METHOD_WHT:
        plane = wvd(sig, n_freq_bins=args.nf)
    else:
        plane = fsst(sig, WindowSpec(args.window), args.n_fft)
    write_plane_csv(plane, args.out)
    print(f"wrote {plane.n_time}x{plane.n_freq} {plane.method_tag} plane to {args.out}")
    return 0


def _cmd_detect(args) -> int:
    sig = read_iq(args.infile)
    config = BenchConfig(
        method=args.method,
        orders=(args.order,),
        n_theta=args.n_theta,
        n_rho=args.n_rho,
        n_freq_bins=args.nf,
        window_length=args.window,
        n_fft=args.n_fft,
        sample_rate_hz=sig.sample_rate_hz,
        pf=args.pf,
    )
    plane = _stat_planes(config, sig)[args.order]
    if args.threshold_mode == "analytic":
        policy = ThresholdPolicy(mode=MODE_ANALYTIC, pf=args.pf, calibration=3)
        eta = calibrate_threshold(policy, plane)
    else:
        k = args.calibration if args.calibration > 0 else max(100, math.ceil(5.0 / args.pf))
        policy = ThresholdPolicy(mode=MODE_CALIBRATED, pf=args.pf, calibration=k)
        # unit-power template so the noise-only pipeline sees the same length
        template = ComplexSignal(
            np.ones(len(sig), dtype=complex), sig.sample_rate_hz
        )

        def null_statistic(i: int) -> float:
            noise = noise_only(template, 0.0, _cal_seed(args.seed, i))
            return float(_stat_planes(config, noise)[args.order].values.max())

        eta = calibrate_threshold(policy, null_statistic, args.seed)
    report = detect_peak(plane, eta)
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_keyvalue())
    return 0


def _cal_seed(master: int, index: int) -> int:
    ss = np.random.SeedSequence((int(master), 909, int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def _cmd_bench(args) -> int:
    config = load_config(args.config)
    result = run_bench(config)
    paths = write_report(result, args.out)
    for metric in (m.strip() for m in args.plot_metrics.split(",") if m.strip()):
        series_path = f"{args.out}.{metric}.csv"
        write_plot_data(result, metric, series_path)
        paths.append(series_path)
    print("\n".join(str(p) for p in paths))
    return 0


def _cmd_report(args) -> int:
    import csv

    from .bench import BenchCell, BenchResult

    with open(args.infile) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        print("empty result file")
        return 0
    cells = []
    for r in rows:
        snr = None if r["snr_db"] == "none" else float(r["snr_db"])
        cells.append(
            BenchCell(
                method=r["method"],
                snr_db=snr,
                order=int(r["order"]),
                trials=int(r["trials"]),
                pd=float(r["pd"]),
                pf_emp=float(r["pf_emp"]),
                output_snr_db=float(r["output_snr_db"]),
                confidence=float(r["confidence"]),
                err_f_pct=float(r["err_f_pct"]),
                err_g_pct=float(r["err_g_pct"]),
                wall_s=float(r["wall_s"]),
            )
        )
    orders = tuple(sorted({c.order for c in cells}))
    snrs = tuple(sorted({c.snr_db for c in cells if c.snr_db is not None}))
    config = BenchConfig(
        method=cells[0].method,
        snr_grid_db=snrs or (None,),
        orders=orders,
        trials=max(30, cells[0].trials),
    )
    result = BenchResult(config=config, cells=tuple(cells), thresholds={})
    sys.stdout.write(summarize(result))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "tfr": _cmd_tfr,
    "detect": _cmd_detect,
    "bench": _cmd_bench,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())
