"""Grating-depth control of the SLM path splitter.

Two juxtaposed blazed gratings on the SLM send photon B into arms B0 and B1.
Scaling a grating's phase depth by M in [0, 1] leaves sinc^2(pi(n - M)) of the
light in diffraction order n; only order 1 reaches the fibre, the rest is
discarded. Attenuating the favoured arm this way rebalances the bit bias.
"""

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import (
    BALANCE_MAX_ITERATIONS,
    BALANCE_TOLERANCE,
    ENTROPY_SLOPE_STEP,
    SLM_GREY_LEVELS,
)
from .exceptions import ArmRoleError, ParameterError


def _check_depth(depth_M: float, name: str = "depth_M") -> None:
    if not 0.0 <= depth_M <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {depth_M}")


def _check_ratio(R: float) -> None:
    if not R > 0:
        raise ParameterError(f"bias ratio R must be positive, got {R}")


@dataclass(frozen=True)
class SplitterConfig:
    """
    Grating depths of the two-arm SLM splitter and the bias they act on.

    Attributes:
        bias_ratio_R: Uncorrected system bias R = p0 / p1
        depth_M0: Grating depth scale of arm B0
        depth_M1: Grating depth scale of arm B1
        grey_levels: SLM grey-scale resolution (256 for an 8-bit SLM)
    """

    bias_ratio_R: float = 1.0
    depth_M0: float = 1.0
    depth_M1: float = 1.0
    grey_levels: int = SLM_GREY_LEVELS

    def __post_init__(self):
        _check_ratio(self.bias_ratio_R)
        _check_depth(self.depth_M0, "depth_M0")
        _check_depth(self.depth_M1, "depth_M1")
        if self.grey_levels < 1:
            raise ParameterError(f"grey_levels must be positive, got {self.grey_levels}")

    def quantized(self) -> "SplitterConfig":
        """Copy with both depths snapped to the SLM grey-level grid."""
        return replace(
            self,
            depth_M0=quantize_depth(self.depth_M0, self.grey_levels),
            depth_M1=quantize_depth(self.depth_M1, self.grey_levels),
        )

    def path_probabilities(self) -> tuple[float, float]:
        """Raw path choice (p0, p1) before the gratings, from R = p0 / p1."""
        p0 = self.bias_ratio_R / (1.0 + self.bias_ratio_R)
        return p0, 1.0 - p0

    def grating_efficiencies(self) -> tuple[float, float]:
        """First-order efficiency of each arm's grating."""
        return diffraction_efficiency(1, self.depth_M0), diffraction_efficiency(1, self.depth_M1)

    def bit_probabilities(self) -> tuple[float, float]:
        """Renormalized (p0', p1') of a detected bit."""
        return two_arm_probabilities(self.bias_ratio_R, self.depth_M0, self.depth_M1)


def diffraction_efficiency(order_n: int, depth_M: float) -> float:
    """
    Fraction of light in diffraction order n for a grating scaled by M.

    Args:
        order_n: Diffraction order
        depth_M: Grating depth scale in [0, 1]

    Returns:
        sinc^2(pi (n - M)), with sinc(0) = 1

    Raises:
        ParameterError: depth_M outside [0, 1]
    """
    _check_depth(depth_M)
    # np.sinc is the normalized sinc, sin(pi x) / (pi x)
    return float(np.sinc(order_n - depth_M) ** 2)


def two_arm_probabilities(R: float, depth_M0: float, depth_M1: float) -> tuple[float, float]:
    """
    Renormalized bit probabilities when both arms carry scaled gratings.

    Args:
        R: Uncorrected bias ratio p0 / p1
        depth_M0: Grating depth of arm B0
        depth_M1: Grating depth of arm B1

    Returns:
        (p0', p1') with p0' proportional to R * sinc^2(pi(1 - M0))
        and p1' proportional to sinc^2(pi(1 - M1))

    Raises:
        ParameterError: R <= 0, a depth outside [0, 1], or both arms fully dark
    """
    _check_ratio(R)
    s0 = diffraction_efficiency(1, depth_M0)
    s1 = diffraction_efficiency(1, depth_M1)
    total = R * s0 + s1
    if total <= 0:
        raise ParameterError("Both gratings send no light into the first order")
    p0 = R * s0 / total
    return p0, 1.0 - p0


def rebalanced_probabilities(R: float, depth_M1: float) -> tuple[float, float]:
    """
    Bit probabilities after scaling the grating of arm B1 only.

    Args:
        R: Uncorrected bias ratio p0 / p1
        depth_M1: Grating depth of arm B1

    Returns:
        (p0', p1') = (R / (R + s), s / (R + s)) with s = sinc^2(pi(1 - M1))

    Raises:
        ParameterError: R <= 0 or depth outside [0, 1]
    """
    return two_arm_probabilities(R, 1.0, depth_M1)


def min_entropy_surface(R: float, depth_M1: float) -> float:
    """Min-entropy in bits, -log2 max(p0', p1'), for bias R and B1 depth M."""
    p0, p1 = rebalanced_probabilities(R, depth_M1)
    return float(-np.log2(max(p0, p1)))


def min_entropy_grid(R_values: np.ndarray, M_values: np.ndarray) -> np.ndarray:
    """
    Min-entropy over a grid of bias ratios and B1 depths.

    Args:
        R_values: Bias ratios (positive)
        M_values: Depths in [0, 1]

    Returns:
        Array of shape (len(R_values), len(M_values))
    """
    R = np.asarray(R_values, dtype=float)[:, None]
    M = np.asarray(M_values, dtype=float)[None, :]
    if np.any(R <= 0):
        raise ParameterError("bias ratios must be positive")
    if np.any((M < 0) | (M > 1)):
        raise ParameterError("depths must lie in [0, 1]")
    s = np.sinc(1.0 - M) ** 2
    p1 = s / (R + s)
    return -np.log2(np.maximum(p1, 1.0 - p1))


def bisection(f: Callable[[float], float], left: float, right: float, tol: float) -> float:
    """
    Bisection root finder on a sign-changing bracket.

    Args:
        f: Function to find the root of
        left: Left boundary
        right: Right boundary
        tol: Stop once |f(x)| < tol

    Returns:
        x with |f(x)| < tol, or the bracket midpoint once the bracket can no
        longer be split in floating point

    Raises:
        ParameterError: f(left) and f(right) have the same sign
    """
    fleft = f(left)
    fright = f(right)
    if fleft == 0:
        return left
    if fright == 0:
        return right
    if fleft * fright > 0:
        raise ParameterError("f(left) and f(right) must have opposite signs")

    mid = (left + right) / 2
    for _ in range(BALANCE_MAX_ITERATIONS):
        mid = (left + right) / 2
        fmid = f(mid)
        if abs(fmid) < tol or mid in (left, right):
            return mid
        if fleft * fmid < 0:
            right = mid
        else:
            left = mid
            fleft = fmid
    return mid


def solve_balance_depth(R: float) -> float:
    """
    Depth of the favoured arm's grating that balances the bit probabilities.

    Solves sinc^2(pi(1 - M)) = R on [0, 1]; the left side rises strictly from
    0 to 1 there, so the root is unique.

    Args:
        R: Bias ratio in (0, 1], the attenuated arm being the favoured one

    Returns:
        Balancing depth M in [0, 1]

    Raises:
        ParameterError: R <= 0
        ArmRoleError: R > 1, the caller must invert R and attenuate the other arm
    """
    _check_ratio(R)
    if R > 1.0:
        raise ArmRoleError(
            f"R={R} > 1 favours arm B0: solve for 1/R={1.0 / R:.6f} and attenuate arm B0 instead"
        )
    if R == 1.0:
        return 1.0

    return bisection(lambda M: diffraction_efficiency(1, M) - R, 0.0, 1.0, BALANCE_TOLERANCE)


def quantize_depth(depth_M: float, grey_levels: int = SLM_GREY_LEVELS) -> float:
    """
    Snap a depth to the nearest multiple of 1/grey_levels, ties rounding up.

    Args:
        depth_M: Depth in [0, 1]
        grey_levels: SLM grey-scale resolution

    Returns:
        Quantized depth
    """
    _check_depth(depth_M)
    level = np.floor(depth_M * grey_levels + 0.5)
    return float(min(level, grey_levels) / grey_levels)


def _efficiency_slope(depth_M: float) -> float:
    """d/dM of sinc^2(pi(1 - M))."""
    u = 1.0 - depth_M
    if u == 0.0:
        return 0.0
    sinc_u = np.sinc(u)
    dsinc_du = (np.cos(np.pi * u) - sinc_u) / u
    return float(-2.0 * sinc_u * dsinc_du)


def analytic_entropy_slope(R: float, depth_M: float, side: str = "below") -> float:
    """
    Chain-rule derivative dH_min/dM on the branch active on one side of M.

    At the balance point H_min has a kink; `side` picks the branch reached
    from below or above M.

    Args:
        R: Bias ratio
        depth_M: B1 grating depth
        side: "below" or "above"

    Returns:
        dH_min/dM in bits per unit depth
    """
    _check_ratio(R)
    _check_depth(depth_M)
    s = diffraction_efficiency(1, depth_M)
    ds = _efficiency_slope(depth_M)
    if side == "below":
        p0_branch = s <= R
    elif side == "above":
        p0_branch = s < R
    else:
        raise ParameterError(f"side must be 'below' or 'above', got {side!r}")

    if p0_branch:
        # H = log2((R + s) / R)
        return ds / ((R + s) * np.log(2.0))
    # H = log2((R + s) / s)
    return -R * ds / (s * (R + s) * np.log(2.0))


def entropy_slope(R: float, depth_M: float, side: str = "below", step: float = ENTROPY_SLOPE_STEP) -> float:
    """
    One-sided finite-difference dH_min/dM.

    Central differences straddle the kink at balance, so the difference is
    taken on one side only. Near the ends of [0, 1] the step flips to the
    side that stays inside the interval.

    Args:
        R: Bias ratio
        depth_M: B1 grating depth
        side: "below" (backward difference) or "above" (forward difference)
        step: Difference step

    Returns:
        Estimated slope in bits per unit depth
    """
    _check_depth(depth_M)
    if side not in ("below", "above"):
        raise ParameterError(f"side must be 'below' or 'above', got {side!r}")
    backward = side == "below"
    if backward and depth_M - step < 0.0:
        backward = False
    elif not backward and depth_M + step > 1.0:
        backward = True

    here = min_entropy_surface(R, depth_M)
    if backward:
        return (here - min_entropy_surface(R, depth_M - step)) / step
    return (min_entropy_surface(R, depth_M + step) - here) / step


def quantized_entropy_error(R: float, depth_M: float, grey_levels: int = SLM_GREY_LEVELS) -> float:
    """
    Min-entropy uncertainty from the SLM's finite depth resolution.

    Args:
        R: Bias ratio
        depth_M: B1 grating depth
        grey_levels: SLM grey-scale resolution

    Returns:
        (1 / grey_levels) * |dH_min/dM|, slope taken from below M
    """
    _check_ratio(R)
    if grey_levels < 1:
        raise ParameterError(f"grey_levels must be positive, got {grey_levels}")
    return abs(entropy_slope(R, depth_M, side="below")) / grey_levels
