"""Holographic bias calibration: measure R, solve the grating depth, predict H_min."""

from dataclasses import asdict, dataclass, replace
from typing import Any, Optional, Sequence

import pandas as pd

from .coincidence import CoincidenceParams, extract_bits
from .config import SLM_GREY_LEVELS
from .entropy import estimate_bias, min_entropy
from .exceptions import DegenerateInputError
from .hologram import (
    SplitterConfig,
    min_entropy_surface,
    quantize_depth,
    quantized_entropy_error,
    solve_balance_depth,
    two_arm_probabilities,
)
from .photon_sim import ExperimentConfig, derive_seed, simulate


@dataclass(frozen=True)
class CalibrationRecord:
    """
    Outcome of one calibration.

    Attributes:
        R: Bias ratio the calibration corrects
        arm: Arm whose grating is attenuated ('B1' when R <= 1, else 'B0')
        M_star: Exact balancing depth
        M_quantized: Depth the SLM can display
        H_min_predicted: Min-entropy after applying M_quantized
        dH_min: Min-entropy uncertainty from the depth resolution
        R_corrected: Predicted bias ratio after applying M_quantized
        grey_levels: SLM resolution used for quantization
        R_sigma: Uncertainty on R when it was measured
    """

    R: float
    arm: str
    M_star: float
    M_quantized: float
    H_min_predicted: float
    dH_min: float
    R_corrected: float
    grey_levels: int = SLM_GREY_LEVELS
    R_sigma: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def depths(self) -> tuple[float, float]:
        """(M0, M1) grating depths to display."""
        if self.arm == "B0":
            return self.M_quantized, 1.0
        return 1.0, self.M_quantized

    def apply(self, splitter: SplitterConfig) -> SplitterConfig:
        """Splitter with the calibrated (quantized) depths; the source bias is left as it is."""
        M0, M1 = self.depths()
        return replace(splitter, depth_M0=M0, depth_M1=M1, grey_levels=self.grey_levels)


def calibrate(R: float, grey_levels: int = SLM_GREY_LEVELS, R_sigma: Optional[float] = None) -> CalibrationRecord:
    """
    Solve the grating depth that removes a bias ratio.

    R < 1 means B1 is favoured, so the B1 grating is attenuated; for R > 1
    the roles swap and B0 is attenuated by the depth solved for 1/R.

    Args:
        R: Bias ratio p0 / p1
        grey_levels: SLM grey-scale resolution
        R_sigma: Measurement uncertainty on R, carried into the record

    Returns:
        CalibrationRecord
    """
    if R > 1.0:
        arm, favoured_ratio = "B0", 1.0 / R
    else:
        arm, favoured_ratio = "B1", R

    M_star = solve_balance_depth(favoured_ratio)
    M_quantized = quantize_depth(M_star, grey_levels)
    if arm == "B0":
        p0, p1 = two_arm_probabilities(R, M_quantized, 1.0)
    else:
        p0, p1 = two_arm_probabilities(R, 1.0, M_quantized)

    return CalibrationRecord(
        R=R,
        arm=arm,
        M_star=M_star,
        M_quantized=M_quantized,
        H_min_predicted=min_entropy([p0, p1]),
        dH_min=quantized_entropy_error(favoured_ratio, M_star, grey_levels),
        R_corrected=p0 / p1,
        grey_levels=grey_levels,
        R_sigma=R_sigma,
    )


def calibrate_from_bits(bits, grey_levels: int = SLM_GREY_LEVELS) -> CalibrationRecord:
    """
    Calibrate against the bias measured in a bit string.

    Args:
        bits: BitString, bit array or (n0, n1) counts from the uncorrected setup
        grey_levels: SLM grey-scale resolution

    Raises:
        DegenerateInputError: One outcome never observed
    """
    estimate = estimate_bias(bits)
    return calibrate(estimate.R_hat, grey_levels, R_sigma=estimate.R_sigma)


@dataclass(frozen=True)
class GratingSweepPoint:
    """Measured and predicted min-entropy at one B1 grating depth."""

    depth_M: float
    n_bits: int
    R_hat: float
    H_min_hat: float
    H_min_sigma: float
    H_min_theory: float


def measure_grating_sweep(
    config: ExperimentConfig,
    depths: Sequence[float],
    params: Optional[CoincidenceParams] = None,
    verbose: bool = False,
) -> list[GratingSweepPoint]:
    """
    Simulate and extract bits at a series of B1 grating depths.

    Each depth runs with its own seed derived from `config.seed`, keeping the
    splitter's bias ratio and B0 depth.

    Args:
        config: Base experiment
        depths: B1 depths to visit
        params: Coincidence extraction parameters
        verbose: Print one line per depth

    Returns:
        One GratingSweepPoint per depth, in input order
    """
    points = []
    R = config.splitter.bias_ratio_R
    for i, depth in enumerate(depths):
        splitter = replace(config.splitter, depth_M1=float(depth))
        run = replace(config, splitter=splitter, seed=derive_seed(config.seed, i))
        bits = extract_bits(simulate(run), params)
        try:
            estimate = estimate_bias(bits)
            point = GratingSweepPoint(
                float(depth),
                len(bits),
                estimate.R_hat,
                estimate.Hmin_hat,
                estimate.Hmin_sigma,
                min_entropy_surface(R, float(depth)),
            )
        except DegenerateInputError:
            point = GratingSweepPoint(
                float(depth),
                len(bits),
                float("nan"),
                0.0 if len(bits) else float("nan"),
                float("nan"),
                min_entropy_surface(R, float(depth)),
            )
        points.append(point)
        if verbose:
            print(f"  M = {depth:.4f}: {len(bits)} bits, H_min = {point.H_min_hat:.4f} (calc {point.H_min_theory:.4f})")
    return points


def sweep_frame(points: Sequence[GratingSweepPoint]) -> pd.DataFrame:
    """Grating sweep as a table with one row per depth."""
    return pd.DataFrame([asdict(p) for p in points])
