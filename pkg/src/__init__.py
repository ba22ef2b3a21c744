# Holographic QRNG - Simulation and Analysis Primitives

from .calibration import CalibrationRecord, calibrate, calibrate_from_bits, measure_grating_sweep
from .coincidence import AmbiguityPolicy, BitString, CoincidenceExtractor, CoincidenceParams, extract_bits, extract_file
from .config import BENCH_BIAS_RATIO, COINCIDENCE_WINDOW_PS, DEFAULT_SIGMA, SIGNIFICANCE_ALPHA, SLM_GREY_LEVELS
from .entropy import (
    BiasEstimate,
    ProbabilityVector,
    entropy_report,
    estimate_bias,
    min_entropy,
    self_information,
    shannon_entropy,
)
from .exceptions import (
    ArmRoleError,
    BitInputError,
    ConfigError,
    DegenerateInputError,
    OrderingError,
    ParameterError,
    QrngError,
    SpectrumRangeError,
    TagParseError,
    TimeRangeError,
    TruncationError,
    UnachievableTargetError,
)
from .experiment_config import RunSettings, load_config
from .hologram import (
    SplitterConfig,
    diffraction_efficiency,
    min_entropy_surface,
    quantize_depth,
    quantized_entropy_error,
    solve_balance_depth,
    two_arm_probabilities,
)
from .oam_scan import (
    SpiralBandwidthData,
    entropy_rate_surface,
    measure_spiral_bandwidth,
    predict_spiral_bandwidth,
    tailor_bias,
)
from .photon_sim import Channel, ExperimentConfig, ProjectionSetting, TagStream, TimeTagEvent, derive_seed, simulate
from .spdc_model import SpiralSpectrum, gaussian_spectrum, joint_projection_probability, marginal_projection_weight
from .stattests import TestRecord, TestReport, run_suite
from .time_tags import read_tags, write_tags

__all__ = [
    # Source model
    "SpiralSpectrum",
    "gaussian_spectrum",
    "joint_projection_probability",
    "marginal_projection_weight",
    # Hologram
    "SplitterConfig",
    "diffraction_efficiency",
    "two_arm_probabilities",
    "min_entropy_surface",
    "solve_balance_depth",
    "quantize_depth",
    "quantized_entropy_error",
    # Simulation
    "Channel",
    "TimeTagEvent",
    "TagStream",
    "ProjectionSetting",
    "ExperimentConfig",
    "simulate",
    "derive_seed",
    "read_tags",
    "write_tags",
    # Coincidences
    "AmbiguityPolicy",
    "CoincidenceParams",
    "CoincidenceExtractor",
    "BitString",
    "extract_bits",
    "extract_file",
    # Entropy
    "ProbabilityVector",
    "BiasEstimate",
    "self_information",
    "shannon_entropy",
    "min_entropy",
    "estimate_bias",
    "entropy_report",
    # Testing
    "TestRecord",
    "TestReport",
    "run_suite",
    # Calibration
    "CalibrationRecord",
    "calibrate",
    "calibrate_from_bits",
    "measure_grating_sweep",
    # OAM
    "SpiralBandwidthData",
    "measure_spiral_bandwidth",
    "predict_spiral_bandwidth",
    "entropy_rate_surface",
    "tailor_bias",
    # Configuration
    "RunSettings",
    "load_config",
    # Exceptions
    "QrngError",
    "ParameterError",
    "TruncationError",
    "SpectrumRangeError",
    "ArmRoleError",
    "TimeRangeError",
    "TagParseError",
    "OrderingError",
    "DegenerateInputError",
    "UnachievableTargetError",
    "BitInputError",
    "ConfigError",
    # Config
    "COINCIDENCE_WINDOW_PS",
    "SLM_GREY_LEVELS",
    "BENCH_BIAS_RATIO",
    "DEFAULT_SIGMA",
    "SIGNIFICANCE_ALPHA",
]
