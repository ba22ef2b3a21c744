"""OAM projection experiments: spiral bandwidth, entropy/rate surfaces, bias tailoring.

Projecting arm B_i onto mode l multiplies its routing probability by the
projection weight of l (heralded post-selection). Photon A is heralded through
a multi-mode fibre, so its mode is traced out for bit generation; the l_A
grid of a spiral-bandwidth scan only serves the joint-count picture.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import curve_fit

from .artifacts import atomic_write_text
from .coincidence import CoincidenceParams, extract_bits
from .config import DEFAULT_L_A_CUTOFF
from .entropy import estimate_bias
from .exceptions import (
    DegenerateInputError,
    ParameterError,
    SpectrumRangeError,
    UnachievableTargetError,
)
from .hologram import SplitterConfig
from .photon_sim import ExperimentConfig, ProjectionSetting, derive_seed, simulate
from .spdc_model import SpiralSpectrum, joint_projection_matrix, marginal_projection_weight

ARMS = ("B0", "B1")
SPIRAL_COLUMNS = ["arm", "l_B", "l_A", "counts", "acquisition_s"]
SURFACE_COLUMNS = ["l_B0", "l_B1", "p0", "hmin", "normalized_rate"]


def _ell_range(l_range: tuple[int, int]) -> np.ndarray:
    lo, hi = int(l_range[0]), int(l_range[1])
    if lo > hi:
        raise ParameterError(f"Empty OAM range [{lo}, {hi}]")
    return np.arange(lo, hi + 1)


@dataclass(eq=False)
class SpiralBandwidthData:
    """
    Coincidence counts of a spiral-bandwidth scan.

    Attributes:
        counts: Array (2, len(l_B_values), len(l_A_values)), arm B0 first
        l_B_values: Consecutive scanned B modes
        l_A_values: Consecutive scanned A modes
        acquisition_s: Dwell time per grid point
    """

    counts: np.ndarray
    l_B_values: np.ndarray
    l_A_values: np.ndarray
    acquisition_s: float

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        self.l_B_values = np.asarray(self.l_B_values, dtype=np.int64)
        self.l_A_values = np.asarray(self.l_A_values, dtype=np.int64)
        expected = (2, len(self.l_B_values), len(self.l_A_values))
        if self.counts.shape != expected:
            raise ParameterError(f"counts has shape {self.counts.shape}, expected {expected}")
        if (self.counts < 0).any():
            raise ParameterError("counts must be non-negative")
        for name in ("l_B_values", "l_A_values"):
            values = getattr(self, name)
            if len(values) and not np.array_equal(values, np.arange(values[0], values[0] + len(values))):
                raise ParameterError(f"{name} must be consecutive integers")

    def b_index(self, l_B: int) -> int:
        """
        Row of mode l_B in the grid.

        Raises:
            SpectrumRangeError: l_B not scanned
        """
        if len(self.l_B_values) == 0 or not self.l_B_values[0] <= l_B <= self.l_B_values[-1]:
            raise SpectrumRangeError(f"l_B = {l_B} outside the scanned range")
        return int(l_B - self.l_B_values[0])

    def arm_totals(self, l_A_cutoff: Optional[int] = None) -> np.ndarray:
        """
        Counts summed over l_A, shape (2, len(l_B_values)).

        Args:
            l_A_cutoff: Keep only |l_A| <= cutoff; None keeps the whole scan
        """
        if l_A_cutoff is None:
            return self.counts.sum(axis=2)
        keep = np.abs(self.l_A_values) <= l_A_cutoff
        return self.counts[:, :, keep].sum(axis=2)

    def to_frame(self) -> pd.DataFrame:
        """Long-format table with columns arm, l_B, l_A, counts, acquisition_s."""
        arm, iB, iA = np.meshgrid(
            np.arange(2), np.arange(len(self.l_B_values)), np.arange(len(self.l_A_values)), indexing="ij"
        )
        return pd.DataFrame(
            {
                "arm": np.array(ARMS)[arm.ravel()],
                "l_B": self.l_B_values[iB.ravel()],
                "l_A": self.l_A_values[iA.ravel()],
                "counts": self.counts.ravel(),
                "acquisition_s": self.acquisition_s,
            },
            columns=SPIRAL_COLUMNS,
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "SpiralBandwidthData":
        """
        Rebuild a grid from the long-format table.

        Raises:
            ParameterError: Missing columns, unknown arm labels or a non-rectangular grid
        """
        missing = set(SPIRAL_COLUMNS) - set(frame.columns)
        if missing:
            raise ParameterError(f"Spiral bandwidth table lacks columns {sorted(missing)}")
        if not set(frame["arm"]) <= set(ARMS):
            raise ParameterError(f"Arm labels must be {ARMS}")

        l_B_values = np.sort(frame["l_B"].unique())
        l_A_values = np.sort(frame["l_A"].unique())
        if len(frame) != 2 * len(l_B_values) * len(l_A_values) or frame.duplicated(["arm", "l_B", "l_A"]).any():
            raise ParameterError("Spiral bandwidth table is not a complete rectangular grid")

        counts = np.zeros((2, len(l_B_values), len(l_A_values)), dtype=frame["counts"].dtype)
        arm_idx = frame["arm"].map({name: i for i, name in enumerate(ARMS)}).to_numpy()
        l_B_idx = frame["l_B"].to_numpy() - l_B_values[0]
        l_A_idx = frame["l_A"].to_numpy() - l_A_values[0]
        counts[arm_idx, l_B_idx, l_A_idx] = frame["counts"].to_numpy()
        return cls(counts, l_B_values, l_A_values, float(frame["acquisition_s"].iloc[0]))


def save_spiral_csv(data: SpiralBandwidthData, path: str | Path) -> None:
    """Write a spiral-bandwidth grid as long-format CSV (atomically)."""
    atomic_write_text(path, data.to_frame().to_csv(index=False))


def load_spiral_csv(path: str | Path) -> SpiralBandwidthData:
    """Read a spiral-bandwidth grid written by `save_spiral_csv` or measured elsewhere."""
    return SpiralBandwidthData.from_frame(pd.read_csv(path))


@dataclass(frozen=True)
class OamSurfacePoint:
    """
    Bit statistics for one pair of B-arm projections.

    Attributes:
        l_B0: Mode projected in arm B0
        l_B1: Mode projected in arm B1
        p0_given: Probability of a 0 with photon A traced out
        hmin: -log2 max(p0_given, 1 - p0_given)
        normalized_rate: Combined counts relative to the best scanned pair
    """

    l_B0: int
    l_B1: int
    p0_given: float
    hmin: float
    normalized_rate: float


def _require_projection(config: ExperimentConfig) -> ProjectionSetting:
    if config.projection is None:
        raise ParameterError("OAM scans need a config with a projection (spectrum) section")
    return config.projection


def _scan_point(
    config: ExperimentConfig,
    arm: int,
    l_B: int,
    l_A: int,
    seed: int,
    params: Optional[CoincidenceParams],
) -> int:
    base = _require_projection(config)
    projection = ProjectionSetting(
        spectrum=base.spectrum,
        l_B0=l_B if arm == 0 else None,
        l_B1=l_B if arm == 1 else None,
        l_A=l_A,
        crosstalk=base.crosstalk,
    )
    run = replace(config, projection=projection, seed=seed)

    # Without weight or dark counts on the measured channel the count is exactly zero
    if projection.arm_weights()[arm] == 0.0 and config.dark_rate_hz[arm + 1] == 0.0:
        return 0
    bits = extract_bits(simulate(run), params)
    return bits.n_coincidences_1 if arm else bits.n_coincidences_0


def measure_spiral_bandwidth(
    config: ExperimentConfig,
    l_range: tuple[int, int],
    dwell_s: float,
    l_A_range: Optional[tuple[int, int]] = None,
    params: Optional[CoincidenceParams] = None,
    n_jobs: int = 1,
    verbose: bool = False,
) -> SpiralBandwidthData:
    """
    Simulated spiral-bandwidth scan.

    For each arm and each (l_B, l_A) pair the arm is projected onto l_B, the
    herald onto l_A, the other arm is blocked, and the A-B coincidences are
    counted over `dwell_s`.

    Args:
        config: Experiment with a projection section supplying the spectrum and crosstalk
        l_range: Inclusive (lo, hi) range of l_B
        dwell_s: Acquisition time per point (0 gives an all-zero grid)
        l_A_range: Range of l_A, mirrored l_range by default
        params: Coincidence extraction parameters
        n_jobs: joblib workers over scan points
        verbose: Print progress per arm

    Returns:
        SpiralBandwidthData with integer counts

    Raises:
        SpectrumRangeError: Range beyond the spectrum cutoff
    """
    projection = _require_projection(config)
    l_B_values = _ell_range(l_range)
    l_A_values = _ell_range(l_A_range if l_A_range is not None else (-l_range[1], -l_range[0]))
    for l in (l_B_values[0], l_B_values[-1], l_A_values[0], l_A_values[-1]):
        projection.spectrum.check_index(int(l))
    if dwell_s < 0:
        raise ParameterError(f"dwell_s must be non-negative, got {dwell_s}")

    shape = (2, len(l_B_values), len(l_A_values))
    if dwell_s == 0:
        return SpiralBandwidthData(np.zeros(shape, dtype=np.int64), l_B_values, l_A_values, 0.0)

    run = replace(config, duration_s=dwell_s)
    tasks = [
        (arm, iB, iA)
        for arm in range(2)
        for iB in range(len(l_B_values))
        for iA in range(len(l_A_values))
    ]
    if verbose:
        print(f"Scanning {len(tasks)} projection settings, {dwell_s:g}s each...")
    values = Parallel(n_jobs=n_jobs)(
        delayed(_scan_point)(
            run, arm, int(l_B_values[iB]), int(l_A_values[iA]), derive_seed(config.seed, arm, iB, iA), params
        )
        for arm, iB, iA in tasks
    )
    counts = np.array(values, dtype=np.int64).reshape(shape)
    if verbose:
        print(f"✓ Scan complete: B0 peak {counts[0].max()}, B1 peak {counts[1].max()} counts")
    return SpiralBandwidthData(counts, l_B_values, l_A_values, dwell_s)


def predict_spiral_bandwidth(
    config: ExperimentConfig,
    l_range: tuple[int, int],
    dwell_s: float,
    l_A_range: Optional[tuple[int, int]] = None,
) -> SpiralBandwidthData:
    """
    Expected true-coincidence counts of a spiral-bandwidth scan.

    pair_rate * dwell * eta_A * (path * grating * eta_B of the arm) * P(l_A, l_B);
    accidentals are not included.
    """
    projection = _require_projection(config)
    spec = projection.spectrum
    l_B_values = _ell_range(l_range)
    l_A_values = _ell_range(l_A_range if l_A_range is not None else (-l_range[1], -l_range[0]))
    for l in (l_B_values[0], l_B_values[-1], l_A_values[0], l_A_values[-1]):
        spec.check_index(int(l))

    joint = joint_projection_matrix(spec, projection.crosstalk)
    grid = joint[np.ix_(l_A_values + spec.l_max, l_B_values + spec.l_max)].T

    unprojected = replace(config, projection=None)
    arm_factors = np.array(unprojected.arm_factors())
    scale = config.pair_rate_hz * dwell_s * config.efficiency_A
    counts = scale * arm_factors[:, None, None] * grid[None, :, :]
    return SpiralBandwidthData(counts, l_B_values, l_A_values, dwell_s)


def conditional_probabilities(
    data: SpiralBandwidthData,
    l_B0: int,
    l_B1: int,
    l_A_cutoff: Optional[int] = DEFAULT_L_A_CUTOFF,
) -> tuple[float, float]:
    """
    Bit probabilities for projections (l_B0, l_B1) with photon A traced out.

    Args:
        data: Spiral-bandwidth grid
        l_B0: Mode projected in arm B0
        l_B1: Mode projected in arm B1
        l_A_cutoff: Trace photon A over |l_A| <= cutoff; None keeps the whole scan

    Returns:
        (p0, p1) normalized by the combined counts

    Raises:
        SpectrumRangeError: A mode outside the scanned range
        DegenerateInputError: No counts for this pair
    """
    totals = data.arm_totals(l_A_cutoff)
    n0 = float(totals[0, data.b_index(l_B0)])
    n1 = float(totals[1, data.b_index(l_B1)])
    if n0 + n1 <= 0:
        raise DegenerateInputError(f"No coincidences recorded for (l_B0, l_B1) = ({l_B0}, {l_B1})")
    p0 = n0 / (n0 + n1)
    return p0, 1.0 - p0


def entropy_rate_surface(
    data: SpiralBandwidthData,
    l_B0_range: Optional[tuple[int, int]] = None,
    l_B1_range: Optional[tuple[int, int]] = None,
    l_A_cutoff: Optional[int] = DEFAULT_L_A_CUTOFF,
) -> list[OamSurfacePoint]:
    """
    Min-entropy and normalized bit rate over pairs of B projections.

    Rates are relative to the busiest pair of the whole scan, so slices of
    one scan share a scale. Pairs without any counts get NaN probabilities
    and entropy and a zero rate.

    Args:
        data: Spiral-bandwidth grid
        l_B0_range: Range of l_B0 (whole scan by default)
        l_B1_range: Range of l_B1 (whole scan by default)
        l_A_cutoff: Trace photon A over |l_A| <= cutoff; None keeps the whole scan

    Returns:
        Points ordered by l_B0, then l_B1

    Raises:
        SpectrumRangeError: Range outside the scan
        DegenerateInputError: No counts anywhere on the surface
    """
    full = (int(data.l_B_values[0]), int(data.l_B_values[-1]))
    b0_values = _ell_range(l_B0_range or full)
    b1_values = _ell_range(l_B1_range or full)
    totals = data.arm_totals(l_A_cutoff)
    n0 = totals[0, [data.b_index(int(l)) for l in b0_values]].astype(float)
    n1 = totals[1, [data.b_index(int(l)) for l in b1_values]].astype(float)

    combined = n0[:, None] + n1[None, :]
    peak = totals[0].max() + totals[1].max()
    if peak <= 0:
        raise DegenerateInputError("Surface has no coincidences")

    with np.errstate(invalid="ignore", divide="ignore"):
        p0 = n0[:, None] / combined
        hmin = -np.log2(np.maximum(p0, 1.0 - p0)) + 0.0
    rate = combined / peak

    return [
        OamSurfacePoint(int(l0), int(l1), float(p0[i, j]), float(hmin[i, j]), float(rate[i, j]))
        for i, l0 in enumerate(b0_values)
        for j, l1 in enumerate(b1_values)
    ]


def surface_frame(points: Sequence[OamSurfacePoint]) -> pd.DataFrame:
    """Surface as a table with columns l_B0, l_B1, p0, hmin, normalized_rate."""
    return pd.DataFrame(
        {
            "l_B0": [p.l_B0 for p in points],
            "l_B1": [p.l_B1 for p in points],
            "p0": [p.p0_given for p in points],
            "hmin": [p.hmin for p in points],
            "normalized_rate": [p.normalized_rate for p in points],
        },
        columns=SURFACE_COLUMNS,
    )


def save_surface_csv(points: Sequence[OamSurfacePoint], path: str | Path) -> None:
    atomic_write_text(path, surface_frame(points).to_csv(index=False))


def predicted_p0(
    spec: SpiralSpectrum,
    l_B0: int,
    l_B1: int,
    crosstalk: float = 0.0,
    splitter: Optional[SplitterConfig] = None,
) -> float:
    """Closed-form p(0) for projections (l_B0, l_B1), A traced out."""
    w0 = marginal_projection_weight(spec, l_B0, crosstalk)
    w1 = marginal_projection_weight(spec, l_B1, crosstalk)
    b0, b1 = splitter.bit_probabilities() if splitter is not None else (0.5, 0.5)
    total = b0 * w0 + b1 * w1
    if total <= 0:
        raise DegenerateInputError(f"No weight on projections ({l_B0}, {l_B1})")
    return b0 * w0 / total


def tailor_bias(
    spec: SpiralSpectrum,
    target_p0: float,
    l_B0: int,
    l_range: tuple[int, int] = (-DEFAULT_L_A_CUTOFF, DEFAULT_L_A_CUTOFF),
    crosstalk: float = 0.0,
    splitter: Optional[SplitterConfig] = None,
) -> int:
    """
    Choose the B1 projection that tunes the bit bias to a target.

    Args:
        spec: Spiral spectrum of the source
        target_p0: Desired probability of a 0, in (0, 1)
        l_B0: Fixed B0 projection
        l_range: Candidate l_B1 values (inclusive)
        crosstalk: Crosstalk fraction
        splitter: Splitter state; balanced when omitted

    Returns:
        l_B1 whose predicted p0 is closest to the target; ties prefer the
        smaller |l_B1|, then the positive mode

    Raises:
        UnachievableTargetError: Target outside the achievable p0 interval
    """
    if not 0.0 < target_p0 < 1.0:
        raise ParameterError(f"target_p0 must lie in (0, 1), got {target_p0}")
    candidates = [int(l) for l in _ell_range(l_range)]
    p0 = np.array([predicted_p0(spec, l_B0, l, crosstalk, splitter) for l in candidates])
    interval = (float(p0.min()), float(p0.max()))
    if not interval[0] <= target_p0 <= interval[1]:
        raise UnachievableTargetError(f"Target p0 = {target_p0} is out of reach with l_B0 = {l_B0}", interval)

    distance = np.abs(p0 - target_p0)
    best = min(range(len(candidates)), key=lambda i: (distance[i], abs(candidates[i]), -candidates[i]))
    return candidates[best]


def normalized_counts(data: SpiralBandwidthData) -> np.ndarray:
    """Counts divided by each arm's own maximum (arms with no counts stay zero)."""
    counts = data.counts.astype(float)
    peaks = counts.reshape(2, -1).max(axis=1)
    peaks[peaks == 0] = 1.0
    return counts / peaks[:, None, None]


def _gaussian(x: np.ndarray, amplitude: float, centre: float, width: float) -> np.ndarray:
    return amplitude * np.exp(-((x - centre) ** 2) / (2.0 * width**2))


def diagonal_fwhm(data: SpiralBandwidthData, arm: int | str) -> float:
    """
    FWHM of a Gaussian fitted to the l_A = -l_B counts of one arm.

    Args:
        data: Spiral-bandwidth grid
        arm: 0/'B0' or 1/'B1'

    Raises:
        DegenerateInputError: Fewer than three non-zero diagonal points
    """
    arm_index = ARMS.index(arm) if isinstance(arm, str) else int(arm)
    ells, values = [], []
    for iB, l_B in enumerate(data.l_B_values):
        l_A = -int(l_B)
        if data.l_A_values[0] <= l_A <= data.l_A_values[-1]:
            ells.append(int(l_B))
            values.append(float(data.counts[arm_index, iB, l_A - data.l_A_values[0]]))
    x, y = np.array(ells, dtype=float), np.array(values)
    if np.count_nonzero(y) < 3:
        raise DegenerateInputError("Too few diagonal counts to fit a width")

    guess = (y.max(), float(np.sum(x * y) / y.sum()), max(1.0, float(np.sqrt(np.sum((x**2) * y) / y.sum()))))
    (_, _, width), _ = curve_fit(_gaussian, x, y, p0=guess)
    return float(2.0 * np.sqrt(2.0 * np.log(2.0)) * abs(width))


@dataclass(frozen=True)
class ProjectionSeriesPoint:
    """Bits generated with both B arms projected."""

    l_B0: int
    l_B1: int
    n_bits: int
    p0_hat: float
    hmin_hat: float
    hmin_sigma: float
    bit_rate_hz: float
    normalized_rate: float


def measure_projection_series(
    config: ExperimentConfig,
    l_B0: int,
    l_B1_values: Sequence[int],
    duration_s: Optional[float] = None,
    params: Optional[CoincidenceParams] = None,
    verbose: bool = False,
) -> list[ProjectionSeriesPoint]:
    """
    Generate bit strings with both arms projected, one run per l_B1.

    The herald stays multi-mode. Each run uses its own seed derived from
    `config.seed`.

    Args:
        config: Experiment with a projection section
        l_B0: Fixed B0 projection
        l_B1_values: B1 projections to visit
        duration_s: Acquisition per run (config duration by default)
        params: Coincidence extraction parameters
        verbose: Print one line per run

    Returns:
        One point per l_B1; normalized_rate is relative to the fastest run
    """
    base = _require_projection(config)
    rows = []
    for i, l_B1 in enumerate(l_B1_values):
        projection = ProjectionSetting(base.spectrum, l_B0, int(l_B1), None, base.crosstalk)
        run = replace(
            config,
            projection=projection,
            duration_s=duration_s if duration_s is not None else config.duration_s,
            seed=derive_seed(config.seed, i),
        )
        bits = extract_bits(simulate(run), params)
        try:
            estimate = estimate_bias(bits)
            p0_hat, hmin_hat, hmin_sigma = estimate.p0_hat, estimate.Hmin_hat, estimate.Hmin_sigma
        except DegenerateInputError:
            p0_hat = float(bits.n_coincidences_0 / len(bits)) if len(bits) else float("nan")
            hmin_hat = 0.0 if len(bits) else float("nan")
            hmin_sigma = float("nan")
        rows.append((int(l_B1), len(bits), p0_hat, hmin_hat, hmin_sigma, bits.bit_rate_hz))
        if verbose:
            print(f"  l_B1 = {int(l_B1):+d}: {len(bits)} bits, H_min = {hmin_hat:.4f}")

    peak = max((r[5] for r in rows), default=0.0)
    return [
        ProjectionSeriesPoint(l_B0, l1, n, p0, h, hs, rate, rate / peak if peak > 0 else 0.0)
        for l1, n, p0, h, hs, rate in rows
    ]
