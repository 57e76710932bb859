"""Chirp synthesis, calibrated complex AWGN, and IQ file I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

IQ_MAGIC = b"CMI1"
IQ_VERSION = 1

# Stream tags for derived RNG streams; trials stay order-independent because
# every stream is keyed, not drawn from a shared sequential generator.
STREAM_NOISE = 1
STREAM_CALIBRATION = 2


@dataclass(frozen=True)
class ChirpSpec:
    """Linear-FM pulse: instantaneous frequency f0_hz + chirp_rate_hz_per_s * t."""

    f0_hz: float
    chirp_rate_hz_per_s: float
    amplitude: float = 1.0
    duration_s: float = 10e-6

    def validate(self, sample_rate_hz: float) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        # Sweep must stay inside [0, Fs/2) for the analytic-signal band.
        f_end = self.f0_hz + self.chirp_rate_hz_per_s * self.duration_s
        lo, hi = min(self.f0_hz, f_end), max(self.f0_hz, f_end)
        if lo < 0 or hi >= sample_rate_hz / 2:
            raise ValueError(
                f"instantaneous frequency sweep [{lo:g}, {hi:g}] Hz leaves "
                f"[0, {sample_rate_hz / 2:g}) Hz"
            )


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex baseband sequence."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("signal must be nonempty")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self) -> int:
        return len(self.samples)


def derive_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator keyed by (master_seed, *keys); order-independent."""
    ss = np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def synth_chirp(spec: ChirpSpec, sample_rate_hz: float) -> ComplexSignal:
    """Synthesize s[n] = A*exp(j*2*pi*(F*t + G*t^2/2)) at t = n/Fs."""
    spec.validate(sample_rate_hz)
    n_samples = round(spec.duration_s * sample_rate_hz)
    if n_samples < 8:
        raise ValueError("duration_s * sample_rate_hz must give at least 8 samples")
    t = np.arange(n_samples) / sample_rate_hz
    phase = 2.0 * np.pi * (spec.f0_hz * t + 0.5 * spec.chirp_rate_hz_per_s * t * t)
    samples = spec.amplitude * np.exp(1j * phase)
    return ComplexSignal(samples=samples, sample_rate_hz=sample_rate_hz)


def measure_power(signal: ComplexSignal) -> float:
    """Mean |s[n]|^2 in watts."""
    if len(signal) == 0:
        raise ValueError("empty signal")
    return float(np.mean(np.abs(signal.samples) ** 2))


def add_awgn(
    signal: ComplexSignal, snr_db: float | None, seed: int
) -> ComplexSignal:
    """Add circularly symmetric complex AWGN at the requested SNR.

    ``snr_db=None`` is the no-noise sentinel and returns the input unchanged.
    Noise variance per sample is P_signal / 10^(snr_db/10), referenced to the
    time-domain average signal power.
    """
    if snr_db is None:
        return signal
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite or the no-noise sentinel")
    power = measure_power(signal)
    sigma2 = power / (10.0 ** (snr_db / 10.0))
    rng = derive_rng(seed, STREAM_NOISE)
    n = len(signal)
    scale = np.sqrt(sigma2 / 2.0)
    noise = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return ComplexSignal(signal.samples + noise, signal.sample_rate_hz)


def noise_only(
    template: ComplexSignal, snr_db: float | None, seed: int
) -> ComplexSignal:
    """The noise realization add_awgn would add to ``template``, alone.

    Shares the noise stream with add_awgn so paired signal/noise trials use
    common random numbers. The no-noise sentinel yields an all-zero signal.
    """
    if snr_db is None:
        return ComplexSignal(
            np.zeros(len(template), dtype=complex), template.sample_rate_hz
        )
    noisy = add_awgn(template, snr_db, seed)
    return ComplexSignal(noisy.samples - template.samples, template.sample_rate_hz)


def write_iq(path, signal: ComplexSignal) -> None:
    """Binary IQ file: CMI1 header, f64 sample rate, interleaved float32 I/Q."""
    samples = np.asarray(signal.samples, dtype=np.complex128)
    header = IQ_MAGIC + struct.pack("<III", IQ_VERSION, len(samples), 0)
    interleaved = np.empty(2 * len(samples), dtype="<f4")
    interleaved[0::2] = samples.real
    interleaved[1::2] = samples.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<d", float(signal.sample_rate_hz)))
        fh.write(interleaved.tobytes())


def read_iq(path) -> ComplexSignal:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != IQ_MAGIC:
            raise ValueError(f"{path}: not a CMI1 IQ file")
        version, count, _reserved = struct.unpack("<III", header[4:])
        if version != IQ_VERSION:
            raise ValueError(f"{path}: unsupported IQ format version {version}")
        (rate,) = struct.unpack("<d", fh.read(8))
        raw = np.frombuffer(fh.read(8 * count), dtype="<f4")
    if len(raw) != 2 * count:
        raise ValueError(f"{path}: truncated IQ payload")
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    return ComplexSignal(samples=samples, sample_rate_hz=rate)
