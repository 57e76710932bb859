"""Time-frequency planes: discrete Wigner-Ville and Fourier-synchrosqueezed STFT.

Both planes share the layout: ``values[time_index, freq_index]`` with a
frequency axis spanning [0, Fs/2) so the downstream line-extraction geometry
is identical for either method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import ComplexSignal

METHOD_WVD = "WVD"
METHOD_FSST = "FSST"


@dataclass(frozen=True)
class PlaneAxes:
    """Axis metadata for a time-frequency grid."""

    n_time: int
    n_freq: int
    t0_s: float
    dt_s: float
    f0_hz: float
    df_hz: float

    @property
    def t_span_s(self) -> float:
        return (self.n_time - 1) * self.dt_s

    @property
    def f_span_hz(self) -> float:
        return (self.n_freq - 1) * self.df_hz


@dataclass(frozen=True)
class TfPlane:
    values: np.ndarray  # (n_time, n_freq), float64
    axes: PlaneAxes
    method_tag: str

    def __post_init__(self):
        nt, nf = self.values.shape
        if nt < 8 or nf < 8:
            raise ValueError("plane must be at least 8x8")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("plane values must be finite")

    @property
    def n_time(self) -> int:
        return self.values.shape[0]

    @property
    def n_freq(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowSpec:
    """Odd-length Gaussian analysis window, sigma = length/6 samples."""

    length: int = 63

    def __post_init__(self):
        if self.length < 9 or self.length % 2 == 0:
            raise ValueError("window length must be odd and >= 9")

    @property
    def sigma(self) -> float:
        return self.length / 6.0

    def samples(self) -> np.ndarray:
        m = np.arange(self.length) - (self.length - 1) / 2.0
        return np.exp(-0.5 * (m / self.sigma) ** 2)

    def derivative(self) -> np.ndarray:
        """d/dm of the window, per sample."""
        m = np.arange(self.length) - (self.length - 1) / 2.0
        return -(m / self.sigma**2) * self.samples()


def dft(x: np.ndarray, n_fft: int) -> np.ndarray:
    """Radix-2 DFT with zero padding: X[k] = sum_m x[m] exp(-2j*pi*k*m/n_fft)."""
    x = np.asarray(x)
    if n_fft < len(x):
        raise ValueError("n_fft must be >= len(x)")
    if n_fft < 1 or (n_fft & (n_fft - 1)) != 0:
        raise ValueError(f"n_fft={n_fft} is not a power of two")
    return np.fft.fft(x, n=n_fft)


def wvd(signal: ComplexSignal, n_freq_bins: int = 64) -> TfPlane:
    """Discrete Wigner-Ville distribution on an Nt x Nf grid.

    Column n accumulates the lag kernel s[n+m]*conj(s[n-m]) over
    m in [-L(n), L(n)] with L(n) = min(n, N-1-n, Nf-1): the kernel shrinks
    near the edges rather than zero-padding the signal. Bin k maps to
    f = k*Fs/(2*Nf), and the 2/Fs scale makes the frequency marginal equal
    |s[n]|^2 exactly.
    """
    s = np.asarray(signal.samples, dtype=complex)
    n_samples = len(s)
    if n_samples < 8:
        raise ValueError("signal too short for WVD (need >= 8 samples)")
    if n_freq_bins < 8:
        raise ValueError("n_freq_bins must be >= 8")
    nf = int(n_freq_bins)
    folded = np.zeros((n_samples, nf), dtype=complex)
    cols = np.arange(n_samples)
    # Lag m contributes to columns with L(n) >= |m|; the slot index m % nf
    # matches the DFT twiddle's periodicity, so aliased slots accumulate.
    for m in range(-(nf - 1), nf):
        a = abs(m)
        sel = cols[a : n_samples - a]
        if len(sel) == 0:
            continue
        folded[sel, m % nf] += s[sel + m] * np.conj(s[sel - m])
    ts = 1.0 / signal.sample_rate_hz
    values = 2.0 * ts * np.fft.fft(folded, axis=1).real
    axes = PlaneAxes(
        n_time=n_samples,
        n_freq=nf,
        t0_s=0.0,
        dt_s=ts,
        f0_hz=0.0,
        df_hz=signal.sample_rate_hz / (2.0 * nf),
    )
    return TfPlane(values=values, axes=axes, method_tag=METHOD_WVD)


def _segments(s: np.ndarray, length: int) -> np.ndarray:
    """(N, length) windows centered per sample, zero padded at the edges."""
    half = (length - 1) // 2
    padded = np.concatenate(
        [np.zeros(half, dtype=s.dtype), s, np.zeros(half, dtype=s.dtype)]
    )
    stride = padded.strides[0]
    return np.lib.stride_tricks.as_strided(
        padded, shape=(len(s), length), strides=(stride, stride)
    )


def stft(signal: ComplexSignal, window: WindowSpec, n_fft: int) -> np.ndarray:
    """Hop-1 centered STFT: complex grid of shape (N, n_fft)."""
    s = np.asarray(signal.samples, dtype=complex)
    if window.length > len(s):
        raise ValueError("window longer than signal")
    if n_fft < window.length:
        raise ValueError("n_fft must be >= window length")
    seg = _segments(s, window.length) * window.samples()
    return np.fft.fft(seg, n=n_fft, axis=1)


def fsst(signal: ComplexSignal, window: WindowSpec, n_fft: int) -> TfPlane:
    """Fourier-synchrosqueezed |STFT|^2 on an N x (n_fft/2) plane.

    |STFT|^2 mass moves along frequency to the per-cell estimate
    w(n,k) = f_k - Fs/(2*pi) * Im(STFT_dg/STFT_g); cells below the magnitude
    floor or squeezing outside [0, Fs/2) are dropped.
    """
    s = np.asarray(signal.samples, dtype=complex)
    if window.length > len(s):
        raise ValueError("window longer than signal")
    if n_fft < window.length:
        raise ValueError("n_fft must be >= window length")
    if n_fft < 16 or (n_fft & (n_fft - 1)) != 0:
        raise ValueError("n_fft must be a power of two >= 16")
    fs = signal.sample_rate_hz
    seg = _segments(s, window.length)
    grid_g = np.fft.fft(seg * window.samples(), n=n_fft, axis=1)
    grid_dg = np.fft.fft(seg * window.derivative(), n=n_fft, axis=1)

    n_samples = len(s)
    nf_out = n_fft // 2
    df = fs / n_fft
    plane = np.zeros((n_samples, nf_out))
    mag = np.abs(grid_g)
    peak = mag.max()
    if peak > 0.0:
        keep = mag >= 1e-8 * peak
        f_bins = np.arange(n_fft) * df
        ratio = np.zeros_like(grid_g)
        np.divide(grid_dg, grid_g, out=ratio, where=keep)
        omega = f_bins[None, :] - (fs / (2.0 * np.pi)) * ratio.imag
        target = np.round(omega / df).astype(np.int64)
        keep &= (target >= 0) & (target < nf_out)
        rows, cols = np.nonzero(keep)
        energy = mag[rows, cols] ** 2
        flat = rows * nf_out + target[rows, cols]
        plane = np.bincount(flat, weights=energy, minlength=n_samples * nf_out)
        plane = plane.reshape(n_samples, nf_out)
    axes = PlaneAxes(
        n_time=n_samples, n_freq=nf_out, t0_s=0.0, dt_s=1.0 / fs, f0_hz=0.0, df_hz=df
    )
    return TfPlane(values=plane, axes=axes, method_tag=METHOD_FSST)


def write_plane_csv(plane: TfPlane, path) -> None:
    """CSV export, one row per time index."""
    a = plane.axes
    header = (
        f"# {plane.method_tag},{a.n_time},{a.n_freq},"
        f"{a.t0_s!r},{a.dt_s!r},{a.f0_hz!r},{a.df_hz!r}"
    )
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in plane.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_plane_csv(path) -> TfPlane:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# "):
            raise ValueError(f"{path}: missing plane header")
        tag, nt, nf, t0, dt, f0, df = header[2:].split(",")
        values = np.array(
            [[float(v) for v in line.split(",")] for line in fh if line.strip()]
        )
    axes = PlaneAxes(int(nt), int(nf), float(t0), float(dt), float(f0), float(df))
    if values.shape != (axes.n_time, axes.n_freq):
        raise ValueError(f"{path}: payload shape {values.shape} disagrees with header")
    return TfPlane(values=values, axes=axes, method_tag=tag)
