"""Chirp detection and estimation with mapping-information re-weighting.

The pipeline: synthesize or load a complex chirp, build a time-frequency
plane (Wigner-Ville or Fourier-synchrosqueezed), extract the line feature
with a Hough accumulator, then iterate weights between the two planes built
from the accumulator's exact mapping-set statistics. A Monte Carlo harness
measures detection probability, output SNR, Confidence, and estimation risk
across SNR and iteration order.
"""

from .bench import (
    BenchCell,
    BenchConfig,
    BenchResult,
    load_config,
    plot_data,
    run_bench,
    summarize,
    write_plot_data,
    write_report,
)
from .detect import (
    DetectionReport,
    ThresholdPolicy,
    calibrate_threshold,
    confidence,
    detect_peak,
    estimation_risk,
    output_snr,
)
from .hough import (
    DegenerateAngleError,
    HoughGrid,
    MappingSetStats,
    ParamPlane,
    chirp_to_line,
    hough_forward,
    line_to_chirp,
    normalize_axes,
    param_mapping_stats,
    tf_mapping_stats,
    write_param_csv,
)
from .mi import (
    IterationTrace,
    MIResult,
    WeightMatrix,
    apply_and_standardize,
    build_param_weights,
    build_tf_weights,
    iterate_mi,
    to_probability,
    weight_crossentropy,
    weight_delta_summary,
    weight_negentropy,
)
from .signals import (
    ChirpSpec,
    ComplexSignal,
    add_awgn,
    derive_rng,
    measure_power,
    noise_only,
    read_iq,
    synth_chirp,
    write_iq,
)
from .tfr import (
    PlaneAxes,
    TfPlane,
    WindowSpec,
    dft,
    fsst,
    read_plane_csv,
    stft,
    write_plane_csv,
    wvd,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
