"""Monte Carlo comparison of two ways to measure photon antibunching:

the standard two-detector coincidence setup, and a single detector behind a
beamsplitter whose reflected arm is optically delayed past the detector dead
time.  The package simulates photon streams, models the splitter/delay optics
and a dead-time/after-pulsing detector, builds correlation histograms with
three estimators, and extracts g2(0) from either scheme.
"""
from .analysis import (
    ConstraintReport,
    G2Result,
    PeakLabel,
    PeakSet,
    background_correct,
    check_design_constraints,
    compose_mixing,
    g2_cw_from_dip,
    g2_pulsed_delay,
    g2_pulsed_standard,
    integrate_peaks,
    read_dip,
)
from .config import AnalysisOptions, RunConfig, load_config, loads_config
from .correlator import (
    CorrelationHistogram,
    Estimator,
    NormalizationContext,
    NormalizationMode,
    TacConfig,
    adjacent_interval_histogram,
    all_pairs_correlation,
    merge_histograms,
    normalize,
    shift_axis,
    start_stop_histogram,
)
from .detector import (
    DetectionStats,
    DetectorModel,
    afterpulse_artifact_profile,
    detect,
    detect_with_stats,
)
from .emission import (
    EmitterModel,
    ExcitationConfig,
    ExcitationMode,
    add_background,
    cw_emission_rate_hz,
    pair_prob_for_g2,
    simulate_cw_emission,
    simulate_poisson_source,
    simulate_pulsed_emission,
    simulate_pulsed_emission_labeled,
    true_pulsed_g2,
)
from .errors import (
    AnalysisError,
    BadMagicError,
    ConfigError,
    ConstraintViolation,
    NonMonotonicError,
    StreamFormatError,
    TruncatedFileError,
)
from .io import (
    read_histogram_csv,
    read_stream,
    write_histogram_csv,
    write_stream,
    write_stream_text,
)
from .optics import ChannelConfig, Scheme, split_delay_merge, split_two_arms
from .pipeline import CompareResult, RunResult, compare_schemes, run_pipeline
from .presets import PRESETS, get_preset, preset_names, preset_text
from .streams import PS_PER_S, StreamOrigin, TimestampStream, merge_streams

__version__ = "0.1.0"
