"""Monte Carlo benchmark: detection probability, output SNR, Confidence and
parameter-risk across an SNR grid and iteration orders.

Every trial runs the pipeline once at the highest requested order; lower
orders are read off the iteration trace, so all orders share each trial's
noise realization, and each signal trial is paired with a noise-only trial
built from the same noise stream.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .detect import (
    MODE_ANALYTIC,
    MODE_CALIBRATED,
    ThresholdPolicy,
    calibrate_threshold,
    estimation_risk,
    output_snr,
)
from .hough import HoughGrid, ParamPlane, chirp_to_line, hough_forward
from .mi import iterate_mi
from .signals import ChirpSpec, add_awgn, noise_only, synth_chirp
from .tfr import WindowSpec, fsst, wvd

METHOD_WHT = "wht"
METHOD_FSSHT = "fssht"

_STREAM_TRIAL = 101
_STREAM_CAL = 202


@dataclass(frozen=True)
class BenchConfig:
    method: str = METHOD_WHT
    snr_grid_db: tuple = (-10.0, -8.0, -6.0, -4.0, -2.0, 0.0, 2.0)
    orders: tuple = (0, 1, 2, 3, 4)
    trials: int = 300
    pf: float = 1e-2
    master_seed: int = 1
    n_theta: int = 270
    n_rho: int = 400
    n_freq_bins: int = 128
    window_length: int = 63
    n_fft: int = 256
    chirp: ChirpSpec = field(
        default_factory=lambda: ChirpSpec(5e6, -5e11, 1.0, 10e-6)
    )
    sample_rate_hz: float = 20e6
    threshold_mode: str = MODE_CALIBRATED
    calibration_runs: int = 1000

    def __post_init__(self):
        if self.method not in (METHOD_WHT, METHOD_FSSHT):
            raise ValueError(f"unknown method {self.method!r}")
        if self.trials < 30:
            raise ValueError("need at least 30 trials per cell")
        if list(self.orders) != sorted(self.orders) or any(o < 0 for o in self.orders):
            raise ValueError("orders must be sorted ascending and nonnegative")
        numeric = [s for s in self.snr_grid_db if s is not None]
        if numeric != sorted(numeric):
            raise ValueError("snr grid must be sorted ascending")
        if not 0.0 < self.pf < 1.0:
            raise ValueError("pf must be in (0, 1)")

    @property
    def grid(self) -> HoughGrid:
        return HoughGrid(self.n_theta, self.n_rho)

    def policy(self) -> ThresholdPolicy:
        return ThresholdPolicy(
            mode=self.threshold_mode,
            pf=self.pf,
            calibration=self.calibration_runs,
        )


@dataclass(frozen=True)
class BenchCell:
    method: str
    snr_db: float | None
    order: int
    trials: int
    pd: float
    pf_emp: float
    output_snr_db: float
    confidence: float
    err_f_pct: float
    err_g_pct: float
    wall_s: float


@dataclass(frozen=True)
class BenchResult:
    config: BenchConfig
    cells: tuple
    thresholds: dict

    def cell(self, snr_db, order) -> BenchCell:
        for c in self.cells:
            if c.snr_db == snr_db and c.order == order:
                return c
        raise KeyError((snr_db, order))


def _derived_seed(master_seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def _tf_plane(config: BenchConfig, sig):
    if config.method == METHOD_WHT:
        return wvd(sig, n_freq_bins=config.n_freq_bins)
    return fsst(sig, WindowSpec(config.window_length), config.n_fft)


def plane_axes(config: BenchConfig):
    """Axis metadata of the method's TF plane, without a transform pass."""
    from .tfr import PlaneAxes

    n = round(config.chirp.duration_s * config.sample_rate_hz)
    ts = 1.0 / config.sample_rate_hz
    if config.method == METHOD_WHT:
        nf = config.n_freq_bins
        df = config.sample_rate_hz / (2.0 * nf)
    else:
        nf = config.n_fft // 2
        df = config.sample_rate_hz / config.n_fft
    return PlaneAxes(n, nf, 0.0, ts, 0.0, df)


def _stat_planes(config: BenchConfig, sig) -> dict:
    """Standardized statistic plane per requested order, one iteration pass."""
    plane = _tf_plane(config, sig)
    grid = config.grid
    max_order = max(config.orders)
    out = {}
    if 0 in config.orders or max_order == 0:
        raw = hough_forward(plane, grid)
        sd = raw.values.std()
        values = raw.values / sd if sd > 0 else raw.values
        out[0] = ParamPlane(values=values, grid=grid, source_axes=plane.axes)
    if max_order > 0:
        res = iterate_mi(plane, grid, max_order, keep_planes=True)
        for k in config.orders:
            if k == 0:
                continue
            out[k] = ParamPlane(
                values=res.trace.param_planes[k - 1],
                grid=grid,
                source_axes=plane.axes,
            )
    return out


def _null_maxima(args) -> dict:
    config, run_index = args
    base = synth_chirp(config.chirp, config.sample_rate_hz)
    seed = _derived_seed(config.master_seed, _STREAM_CAL, run_index)
    noise = noise_only(base, 0.0, seed)  # unit-power noise; statistic is scale-free
    planes = _stat_planes(config, noise)
    return {k: float(p.values.max()) for k, p in planes.items()}


def _trial_outcome(args) -> dict:
    config, snr_index, trial_index = args
    snr_db = config.snr_grid_db[snr_index]
    base = synth_chirp(config.chirp, config.sample_rate_hz)
    seed = _derived_seed(config.master_seed, _STREAM_TRIAL, snr_index, trial_index)
    sig = add_awgn(base, snr_db, seed)
    noise = noise_only(base, snr_db, seed)
    true_bin = chirp_to_line(
        config.chirp.f0_hz,
        config.chirp.chirp_rate_hz_per_s,
        plane_axes(config),
        config.grid,
    )
    planes_s = _stat_planes(config, sig)
    planes_n = _stat_planes(config, noise)
    out = {}
    for k in config.orders:
        ps, pn = planes_s[k], planes_n[k]
        flat = int(np.argmax(ps.values))
        ri, ti = divmod(flat, config.n_theta)
        out[k] = {
            "peak": float(ps.values[ri, ti]),
            "argmax": (ri, ti),
            "noise_peak": float(pn.values.max()),
            "t_true_s": float(ps.values[true_bin]),
            "t_true_n": float(pn.values[true_bin]),
        }
    return out


def _estimates(config: BenchConfig, argmax_bin) -> tuple:
    from .hough import line_to_chirp

    grid = config.grid
    axes = plane_axes(config)
    ri, ti = argmax_bin
    try:
        return line_to_chirp(
            float(grid.rho_centers()[ri]), float(grid.theta_centers()[ti]), axes
        )
    except ValueError:
        return float("nan"), float("nan")


def _worker_count() -> int:
    env = os.environ.get("CHIRP_MI_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return 1


def _map_jobs(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=8))


def calibrate(config: BenchConfig) -> dict:
    """Per-order thresholds from noise-only pipeline runs (CALIBRATED mode)."""
    workers = _worker_count()
    policy = config.policy()
    jobs = [(config, i) for i in range(config.calibration_runs)]
    maxima_per_run = _map_jobs(_null_maxima, jobs, workers)
    thresholds = {}
    for k in config.orders:
        maxima = [m[k] for m in maxima_per_run]
        thresholds[k] = calibrate_threshold(policy, lambda i: maxima[i])
    return thresholds


def run_bench(config: BenchConfig) -> BenchResult:
    """Execute the full sweep; deterministic for a fixed master seed."""
    if config.threshold_mode != MODE_CALIBRATED:
        raise ValueError("run_bench supports the CALIBRATED threshold mode")
    workers = _worker_count()
    thresholds = calibrate(config)
    # argmax -> (f0, g) is pure geometry; memoize per distinct bin
    est_cache: dict = {}
    cells = []
    for snr_index, snr_db in enumerate(config.snr_grid_db):
        t0 = time.perf_counter()
        jobs = [(config, snr_index, t) for t in range(config.trials)]
        outcomes = _map_jobs(_trial_outcome, jobs, workers)
        for k in config.orders:
            eta = thresholds[k]
            trials = []
            confs = []
            t_sn, t_n = [], []
            false_alarms = 0
            for oc in outcomes:
                rec = oc[k]
                detected = rec["peak"] >= eta
                bin_key = rec["argmax"]
                if bin_key not in est_cache:
                    est_cache[bin_key] = _estimates(config, bin_key)
                f0_hat, g_hat = est_cache[bin_key]
                trials.append((detected, f0_hat, g_hat))
                confs.append(rec["peak"] / eta)
                t_sn.append(rec["t_true_s"])
                t_n.append(rec["t_true_n"])
                if rec["noise_peak"] >= eta:
                    false_alarms += 1
            err_f, err_g, pd = estimation_risk(
                trials, config.chirp.f0_hz, config.chirp.chirp_rate_hz_per_s
            )
            try:
                snr_out = output_snr(t_sn, t_n)
            except ValueError:
                snr_out = float("nan")
            cells.append(
                BenchCell(
                    method=config.method,
                    snr_db=snr_db,
                    order=k,
                    trials=config.trials,
                    pd=pd,
                    pf_emp=false_alarms / config.trials,
                    output_snr_db=snr_out,
                    confidence=float(np.mean(confs)),
                    err_f_pct=err_f,
                    err_g_pct=err_g,
                    wall_s=time.perf_counter() - t0,
                )
            )
    return BenchResult(config=config, cells=tuple(cells), thresholds=thresholds)


CSV_HEADER = (
    "method,snr_db,order,trials,pd,pf_emp,output_snr_db,"
    "confidence,err_f_pct,err_g_pct,wall_s"
)


def _fmt_snr(snr_db) -> str:
    return "none" if snr_db is None else repr(float(snr_db))


def write_report(result: BenchResult, path) -> list:
    """Main CSV plus a per-order summary table; returns written paths."""
    path = str(path)
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for c in result.cells:
            fh.write(
                f"{c.method},{_fmt_snr(c.snr_db)},{c.order},{c.trials},"
                f"{c.pd!r},{c.pf_emp!r},{c.output_snr_db!r},{c.confidence!r},"
                f"{c.err_f_pct!r},{c.err_g_pct!r},{c.wall_s!r}\n"
            )
    summary_path = path + ".summary.txt"
    with open(summary_path, "w") as fh:
        fh.write(summarize(result))
    return [path, summary_path]


def summarize(result: BenchResult) -> str:
    """Per-order means over the SNR grid, and gains over order 0."""
    config = result.config
    orders = list(config.orders)
    metrics = [
        ("pd", lambda c: c.pd),
        ("output_snr_db", lambda c: c.output_snr_db),
        ("confidence", lambda c: c.confidence),
        ("err_f_pct", lambda c: c.err_f_pct),
        ("err_g_pct", lambda c: c.err_g_pct),
    ]
    lines = [
        f"method={config.method} trials/cell={config.trials} pf={config.pf:g}",
        "per-order means over the SNR grid (and gain vs order 0):",
        "metric          " + "".join(f"{f'order {k}':>18}" for k in orders),
    ]
    for name, getter in metrics:
        by_order = {}
        for k in orders:
            vals = [getter(c) for c in result.cells if c.order == k]
            finite = [v for v in vals if np.isfinite(v)]
            by_order[k] = float(np.mean(finite)) if finite else float("nan")
        base = by_order.get(0, float("nan"))
        row = f"{name:<16}"
        for k in orders:
            gain = by_order[k] - base
            row += f"{by_order[k]:>10.4f} ({gain:+.3f})"
        lines.append(row)
    return "\n".join(lines) + "\n"


PLOT_METRICS = {
    "pd": lambda c: c.pd,
    "output_snr": lambda c: c.output_snr_db,
    "confidence": lambda c: c.confidence,
    "err_f": lambda c: c.err_f_pct,
    "err_g": lambda c: c.err_g_pct,
}


def plot_data(result: BenchResult, metric: str) -> dict:
    """Per-order (snr, value) series for one metric; numeric SNRs only."""
    if metric not in PLOT_METRICS:
        raise ValueError(f"unknown metric {metric!r}; pick from {sorted(PLOT_METRICS)}")
    getter = PLOT_METRICS[metric]
    series: dict = {k: [] for k in result.config.orders}
    for c in sorted(
        (c for c in result.cells if c.snr_db is not None),
        key=lambda c: (c.order, c.snr_db),
    ):
        series[c.order].append((c.snr_db, getter(c)))
    return series


def write_plot_data(result: BenchResult, metric: str, path) -> None:
    series = plot_data(result, metric)
    with open(path, "w") as fh:
        fh.write(f"order,snr_db,{metric}\n")
        for order, points in series.items():
            for snr, value in points:
                fh.write(f"{order},{snr!r},{value!r}\n")


def load_config(path) -> BenchConfig:
    """Flat key = value text config; dotted keys nest; '#' starts a comment."""
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value

    def scalar(text):
        if text.lower() in ("none", "no-noise"):
            return None
        if text.lower() in ("true", "false"):
            return text.lower() == "true"
        try:
            return int(text)
        except ValueError:
            pass
        try:
            return float(text)
        except ValueError:
            return text

    def listing(text):
        return tuple(scalar(part.strip()) for part in text.split(",") if part.strip())

    known = {
        "method": ("method", scalar),
        "snr_db": ("snr_grid_db", listing),
        "orders": ("orders", listing),
        "trials": ("trials", scalar),
        "pf": ("pf", scalar),
        "master_seed": ("master_seed", scalar),
        "grid.n_theta": ("n_theta", scalar),
        "grid.n_rho": ("n_rho", scalar),
        "wvd.n_freq_bins": ("n_freq_bins", scalar),
        "fsst.window_length": ("window_length", scalar),
        "fsst.n_fft": ("n_fft", scalar),
        "sample_rate_hz": ("sample_rate_hz", scalar),
        "threshold.mode": ("threshold_mode", scalar),
        "threshold.calibration_runs": ("calibration_runs", scalar),
    }
    chirp_keys = {
        "chirp.f0_hz": "f0_hz",
        "chirp.rate_hz_per_s": "chirp_rate_hz_per_s",
        "chirp.amplitude": "amplitude",
        "chirp.duration_s": "duration_s",
    }
    kwargs = {}
    chirp_kwargs = {}
    for key, text in raw.items():
        if key in known:
            name, conv = known[key]
            kwargs[name] = conv(text)
        elif key in chirp_keys:
            chirp_kwargs[chirp_keys[key]] = float(text)
        else:
            raise ValueError(f"{path}: unknown config key {key!r}")
    if "threshold_mode" in kwargs:
        mode = str(kwargs["threshold_mode"]).upper()
        if mode not in (MODE_CALIBRATED, MODE_ANALYTIC):
            raise ValueError(f"{path}: unknown threshold mode {kwargs['threshold_mode']!r}")
        kwargs["threshold_mode"] = mode
    config = BenchConfig(**kwargs)
    if chirp_kwargs:
        config = replace(config, chirp=replace(config.chirp, **chirp_kwargs))
    return config
