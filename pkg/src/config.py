"""Configuration constants for the holographic QRNG simulator."""

import math

# Coincidence detection
COINCIDENCE_WINDOW_PS = 25_000
TIME_TAG_RESOLUTION_PS = 1

# SLM hologram (8-bit grey scale spanning a 2*pi phase range)
SLM_GREY_LEVELS = 256

# Bias measured on the uncorrected bench, and the depth that balances it
BENCH_BIAS_RATIO = 0.8518
BENCH_BALANCE_DEPTH = 0.7812

# Bisection on the grating balance condition
BALANCE_TOLERANCE = 1e-12
BALANCE_MAX_ITERATIONS = 200

# One-sided step for the min-entropy slope
ENTROPY_SLOPE_STEP = 1e-6

# Spiral bandwidth: FWHM of 19 OAM units per arm
SPIRAL_FWHM = 19.0
DEFAULT_SIGMA = SPIRAL_FWHM / (2.0 * math.sqrt(2.0 * math.log(2.0)))
DEFAULT_L_MAX = 50
# Spectrum mass beyond +-l_max must stay below 1e-6
SPECTRUM_SIGMA_COVERAGE = 6.0
CROSSTALK_WIDTH = 1.0
DEFAULT_L_A_CUTOFF = 20

# Source and detectors. Efficiencies are not published; these reproduce the
# 24 kHz single-mode coincidence rate: 1e6 * 0.2 * 0.12 = 24 kHz.
DEFAULT_PAIR_RATE_HZ = 1.0e6
DEFAULT_EFFICIENCY_A = 0.20
DEFAULT_EFFICIENCY_B = 0.12
DEFAULT_DARK_RATE_HZ = 100.0
DEFAULT_JITTER_PS = 350.0
# Signed 64-bit picosecond arithmetic with headroom for jitter: about 4.6e6 s
MAX_DURATION_S = 2**62 / 1e12

# Time-tag file format
TAG_MAGIC = b"QTAG"
TAG_VERSION = 1
TAG_HEADER_SIZE = 16
TAG_RECORD_SIZE = 9
CHANNEL_NAMES = ("A", "B0", "B1")

# Statistical testing
SIGNIFICANCE_ALPHA = 0.01
BLOCK_FREQUENCY_BLOCK_LEN = 128
SERIAL_BLOCK_LEN = 16
APPROXIMATE_ENTROPY_BLOCK_LEN = 10
TEMPLATE_LEN = 9
NON_OVERLAPPING_BLOCKS = 8
OVERLAPPING_BLOCK_LEN = 1032
LINEAR_COMPLEXITY_BLOCK_LEN = 500
RANK_MATRIX_SIZE = 32
# Peak threshold sqrt(ln(1/0.05) * n) for the spectral test
DFT_THRESHOLD_FACTOR = math.log(1.0 / 0.05)

MIN_BITS = {
    "frequency_monobit": 100,
    "block_frequency": 128,
    "runs": 100,
    "longest_run_of_ones": 128,
    "cumulative_sums": 100,
    "dft_spectral": 1000,
    "serial": 100,
    "approximate_entropy": 100,
    "binary_matrix_rank": 38 * 32 * 32,
    "non_overlapping_template": 8 * 1032,
    "overlapping_template": 1_000_000,
    "maurers_universal": 387_840,
    "linear_complexity": 1_000_000,
    "random_excursions": 1_000_000,
    "random_excursions_variant": 1_000_000,
}

# Random excursions needs at least this many zero-crossing cycles
MIN_EXCURSION_CYCLES = 500

TOOL_VERSION = "0.1.0"
