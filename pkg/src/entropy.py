"""Information measures and bias estimation from counted bits."""

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.special import erfc

from .coincidence import BitString
from .exceptions import DegenerateInputError, ParameterError

NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """
    Discrete distribution over d outcomes.

    Attributes:
        probs: Non-negative probabilities summing to 1 (within 1e-9)
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ParameterError("A probability vector needs at least one entry")
        if not np.all(np.isfinite(probs)) or (probs < 0).any():
            raise ParameterError(f"Probabilities must be finite and non-negative, got {probs}")
        if abs(probs.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise ParameterError(f"Probabilities sum to {probs.sum():.12g}, expected 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def binary(cls, p0: float) -> "ProbabilityVector":
        """Two-outcome distribution (p0, 1 - p0)."""
        return cls(np.array([p0, 1.0 - p0]))

    @classmethod
    def from_bias_ratio(cls, R: float) -> "ProbabilityVector":
        """Two-outcome distribution with p0/p1 = R."""
        if not R > 0:
            raise ParameterError(f"Bias ratio must be positive, got {R}")
        return cls.binary(R / (1.0 + R))

    @classmethod
    def uniform(cls, d: int) -> "ProbabilityVector":
        return cls(np.full(d, 1.0 / d))

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class BiasEstimate:
    """
    Bias ratio and min-entropy estimated from bit counts.

    Attributes:
        n0: Zeros counted
        n1: Ones counted
        R_hat: n0 / n1
        R_sigma: Propagated binomial standard error on R_hat
        Hmin_hat: Min-entropy of the empirical distribution (bits)
        Hmin_sigma: Propagated standard error on Hmin_hat
    """

    n0: int
    n1: int
    R_hat: float
    R_sigma: float
    Hmin_hat: float
    Hmin_sigma: float

    @property
    def p0_hat(self) -> float:
        return self.n0 / (self.n0 + self.n1)


def self_information(p: float, base_b: int = 2) -> float:
    """
    Information content -log_b(p) of an outcome with probability p.

    Args:
        p: Outcome probability in [0, 1]
        base_b: Logarithm base (>= 2)

    Returns:
        Information in base-b units; math.inf for p = 0
    """
    if base_b < 2:
        raise ParameterError(f"Logarithm base must be at least 2, got {base_b}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"Probability must lie in [0, 1], got {p}")
    if p == 0.0:
        return math.inf
    return -math.log(p, base_b) + 0.0


def _as_vector(pv: ProbabilityVector | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(pv, ProbabilityVector):
        return pv.probs
    return ProbabilityVector(np.asarray(pv, dtype=float)).probs


def shannon_entropy(pv: ProbabilityVector | Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    probs = _as_vector(pv)
    nonzero = probs[probs > 0]
    return float(-np.sum(nonzero * np.log2(nonzero))) + 0.0


def min_entropy(pv: ProbabilityVector | Sequence[float] | np.ndarray) -> float:
    """Min-entropy -log2(max p_i) in bits."""
    return float(-np.log2(_as_vector(pv).max())) + 0.0


def _counts(bits: BitString | np.ndarray | tuple[int, int]) -> tuple[int, int]:
    if isinstance(bits, BitString):
        return bits.n_coincidences_0, bits.n_coincidences_1
    if isinstance(bits, tuple):
        return int(bits[0]), int(bits[1])
    arr = np.asarray(bits)
    n1 = int(np.count_nonzero(arr))
    return len(arr) - n1, n1


def estimate_bias(bits: BitString | np.ndarray | tuple[int, int]) -> BiasEstimate:
    """
    Estimate the bias ratio and min-entropy of a bit string.

    Errors follow binomial (Wald) propagation: with p = n0/n,
    sigma_p = sqrt(p(1-p)/n), R_sigma = sigma_p/(1-p)^2 and
    Hmin_sigma = sigma_p/(max(p, 1-p) ln 2).

    Args:
        bits: BitString, bit array, or (n0, n1) counts

    Returns:
        BiasEstimate

    Raises:
        DegenerateInputError: Either count is zero
    """
    n0, n1 = _counts(bits)
    if n0 <= 0 or n1 <= 0:
        raise DegenerateInputError(f"Bias needs both outcomes observed, got n0={n0}, n1={n1}")
    n = n0 + n1
    p = n0 / n
    sigma_p = math.sqrt(p * (1.0 - p) / n)
    p_max = max(p, 1.0 - p)
    return BiasEstimate(
        n0=n0,
        n1=n1,
        R_hat=n0 / n1,
        R_sigma=sigma_p / (1.0 - p) ** 2,
        Hmin_hat=-math.log2(p_max) + 0.0,
        Hmin_sigma=sigma_p / (p_max * math.log(2.0)),
    )


def bias_conformance(bits: BitString | np.ndarray | tuple[int, int], expected_p0: float) -> float:
    """
    Two-sided p-value that a bit string follows a target zero fraction.

    A tailored source is expected to produce zeros with probability
    `expected_p0`; a small p-value flags a string that does not.

    Args:
        bits: BitString, bit array, or (n0, n1) counts
        expected_p0: Target probability of a 0, in (0, 1)

    Returns:
        erfc(|z| / sqrt(2)) for the normal-approximation binomial z-score
    """
    if not 0.0 < expected_p0 < 1.0:
        raise ParameterError(f"expected_p0 must lie in (0, 1), got {expected_p0}")
    n0, n1 = _counts(bits)
    n = n0 + n1
    if n == 0:
        raise DegenerateInputError("Cannot test an empty bit string")
    z = (n0 - n * expected_p0) / math.sqrt(n * expected_p0 * (1.0 - expected_p0))
    return float(erfc(abs(z) / math.sqrt(2.0)))


def entropy_report(bits: BitString | np.ndarray | tuple[int, int]) -> dict[str, Any]:
    """
    Entropy summary for JSON output.

    Returns:
        {n0, n1, R_hat, R_sigma, H_shannon, H_min, H_min_sigma}
    """
    estimate = estimate_bias(bits)
    pv = ProbabilityVector.binary(estimate.p0_hat)
    return {
        "n0": estimate.n0,
        "n1": estimate.n1,
        "R_hat": estimate.R_hat,
        "R_sigma": estimate.R_sigma,
        "H_shannon": shannon_entropy(pv),
        "H_min": estimate.Hmin_hat,
        "H_min_sigma": estimate.Hmin_sigma,
    }
