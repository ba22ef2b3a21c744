"""Discrete OAM spectrum of the down-converted photon pair.

The two-photon state is carried as a probability spectrum p_l = |C_l|^2 over
azimuthal indices l in [-l_max, l_max], radial index fixed at p = 0. Joint
projections follow OAM conservation (l_A = -l_B), optionally broadened by a
width-1 crosstalk term.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import CROSSTALK_WIDTH, SPECTRUM_SIGMA_COVERAGE
from .exceptions import ParameterError, SpectrumRangeError, TruncationError


@dataclass(frozen=True, eq=False)
class SpiralSpectrum:
    """
    Normalized OAM weights over a symmetric index range.

    Attributes:
        l_max: OAM cutoff, the spectrum spans [-l_max, +l_max]
        weights: Read-only array of 2*l_max+1 probabilities, index 0 is -l_max
        sigma: Width of the generating Gaussian (OAM units)
    """

    l_max: int
    weights: np.ndarray
    sigma: float

    @property
    def indices(self) -> np.ndarray:
        """OAM indices matching `weights`."""
        return np.arange(-self.l_max, self.l_max + 1)

    def weight(self, l: int) -> float:
        """Probability weight of mode l."""
        self.check_index(l)
        return float(self.weights[l + self.l_max])

    def check_index(self, l: int) -> None:
        """
        Raise if l lies outside the spectrum.

        Raises:
            SpectrumRangeError: |l| > l_max
        """
        if abs(l) > self.l_max:
            raise SpectrumRangeError(f"OAM index {l} outside spectrum range [-{self.l_max}, {self.l_max}]")

    def fwhm(self) -> float:
        """Full width at half maximum of the weight profile, by linear interpolation."""
        half = self.weights.max() / 2.0
        positive = self.weights[self.l_max:]
        below = np.nonzero(positive < half)[0]
        if len(below) == 0:
            return float("nan")
        k = int(below[0])
        # Interpolate the crossing between k-1 and k
        w_hi, w_lo = positive[k - 1], positive[k]
        crossing = (k - 1) + (w_hi - half) / (w_hi - w_lo)
        return 2.0 * crossing


def _freeze(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float).copy()
    values.flags.writeable = False
    return values


def gaussian_spectrum(sigma: float, l_max: int) -> SpiralSpectrum:
    """
    Build a Gaussian spiral spectrum, weights proportional to exp(-l^2 / (2 sigma^2)).

    Args:
        sigma: Standard deviation in OAM units
        l_max: OAM cutoff

    Returns:
        Normalized, symmetric SpiralSpectrum

    Raises:
        ParameterError: sigma <= 0 or l_max < 1
        TruncationError: l_max < 6 * sigma (mass beyond the cutoff would exceed 1e-6)
    """
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if l_max < 1:
        raise ParameterError(f"l_max must be at least 1, got {l_max}")
    if l_max < SPECTRUM_SIGMA_COVERAGE * sigma:
        raise TruncationError(
            f"l_max={l_max} truncates a spectrum of sigma={sigma}; need l_max >= {SPECTRUM_SIGMA_COVERAGE * sigma:.2f}"
        )

    ells = np.arange(-l_max, l_max + 1, dtype=float)
    raw = np.exp(-(ells**2) / (2.0 * sigma**2))
    weights = raw / raw.sum()
    return SpiralSpectrum(l_max=l_max, weights=_freeze(weights), sigma=float(sigma))


def sigma_from_fwhm(fwhm: float) -> float:
    """Gaussian sigma for a target full width at half maximum."""
    if not fwhm > 0:
        raise ParameterError(f"FWHM must be positive, got {fwhm}")
    return fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))


def _check_crosstalk(crosstalk: float) -> None:
    if not 0.0 <= crosstalk < 1.0:
        raise ParameterError(f"crosstalk must lie in [0, 1), got {crosstalk}")


def _crosstalk_kernel(l_max: int) -> tuple[np.ndarray, int]:
    """Width-1 Gaussian over l_A + l_B, normalized over every reachable sum."""
    k_max = 2 * l_max
    k = np.arange(-k_max, k_max + 1, dtype=float)
    g = np.exp(-(k**2) / (2.0 * CROSSTALK_WIDTH**2))
    return g / g.sum(), k_max


def joint_projection_probability(spec: SpiralSpectrum, l_A: int, l_B: int, crosstalk: float = 0.0) -> float:
    """
    Probability of a joint projection onto |l_A>|l_B>.

    With crosstalk = 0 this is weights[l_B] on the anti-diagonal l_A = -l_B and
    zero elsewhere; the crosstalk term spreads a fraction of the weight over
    neighbouring sums l_A + l_B.

    Args:
        spec: Spiral spectrum
        l_A: Projection mode of the heralding photon
        l_B: Projection mode of photon B
        crosstalk: Fraction of weight moved off the anti-diagonal, in [0, 1)

    Returns:
        Joint projection probability

    Raises:
        SpectrumRangeError: Either index outside the spectrum
        ParameterError: crosstalk outside [0, 1)
    """
    spec.check_index(l_A)
    spec.check_index(l_B)
    _check_crosstalk(crosstalk)

    diagonal = 1.0 if l_A == -l_B else 0.0
    if crosstalk == 0.0:
        return spec.weight(l_B) * diagonal

    g, k_max = _crosstalk_kernel(spec.l_max)
    return spec.weight(l_B) * ((1.0 - crosstalk) * diagonal + crosstalk * float(g[l_A + l_B + k_max]))


def marginal_projection_weight(spec: SpiralSpectrum, l_B: int, crosstalk: float = 0.0) -> float:
    """
    Projection weight of photon B with the heralding mode traced out.

    Args:
        spec: Spiral spectrum
        l_B: Projection mode of photon B
        crosstalk: Crosstalk fraction, in [0, 1)

    Returns:
        Sum over l_A of the joint projection probability

    Raises:
        SpectrumRangeError: l_B outside the spectrum
        ParameterError: crosstalk outside [0, 1)
    """
    spec.check_index(l_B)
    _check_crosstalk(crosstalk)
    if crosstalk == 0.0:
        return spec.weight(l_B)

    g, k_max = _crosstalk_kernel(spec.l_max)
    # l_A runs over [-l_max, l_max], so l_A + l_B covers a contiguous window of g
    lo = l_B - spec.l_max + k_max
    hi = l_B + spec.l_max + k_max
    coverage = float(g[lo:hi + 1].sum())
    return spec.weight(l_B) * ((1.0 - crosstalk) + crosstalk * coverage)


def joint_projection_matrix(spec: SpiralSpectrum, crosstalk: float = 0.0) -> np.ndarray:
    """
    Joint projection probabilities for every (l_A, l_B) pair.

    Returns:
        Array of shape (2*l_max+1, 2*l_max+1) indexed [l_A + l_max, l_B + l_max]
    """
    _check_crosstalk(crosstalk)
    ells = spec.indices
    diagonal = (ells[:, None] == -ells[None, :]).astype(float)
    if crosstalk == 0.0:
        return diagonal * spec.weights[None, :]

    g, k_max = _crosstalk_kernel(spec.l_max)
    sums = ells[:, None] + ells[None, :] + k_max
    spread = g[sums]
    return ((1.0 - crosstalk) * diagonal + crosstalk * spread) * spec.weights[None, :]


def marginal_weights(spec: SpiralSpectrum, crosstalk: float = 0.0) -> np.ndarray:
    """Marginal projection weight for every l_B, indexed [l_B + l_max]."""
    return np.array([marginal_projection_weight(spec, int(l), crosstalk) for l in spec.indices])


def save_spectrum(spec: SpiralSpectrum, path: str | Path) -> None:
    """
    Write a spectrum as a two-column plain-text file (l, weight).

    Args:
        spec: Spectrum to export
        path: Output file path
    """
    table = np.column_stack([spec.indices, spec.weights])
    np.savetxt(path, table, fmt=["%d", "%.17e"], header=f"l weight  (sigma={spec.sigma!r})")


def load_spectrum(path: str | Path) -> SpiralSpectrum:
    """
    Read a two-column (l, weight) spectrum, e.g. a measured spiral bandwidth.

    Weights are renormalized to sum 1. Sigma is taken from the file header when
    present, otherwise estimated from the second moment.

    Args:
        path: Plain-text spectrum file

    Returns:
        SpiralSpectrum over the file's index range

    Raises:
        ParameterError: Indices not a contiguous symmetric range, or negative weights
    """
    table = np.loadtxt(path, ndmin=2)
    if table.shape[1] != 2:
        raise ParameterError(f"Spectrum file {path} must have two columns, found {table.shape[1]}")

    order = np.argsort(table[:, 0])
    ells = table[order, 0]
    weights = table[order, 1]
    l_max = int(round(ells[-1]))
    if not np.array_equal(ells, np.arange(-l_max, l_max + 1)):
        raise ParameterError(f"Spectrum file {path} must cover every index in [-l_max, l_max]")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ParameterError(f"Spectrum file {path} has negative or all-zero weights")

    weights = weights / weights.sum()
    sigma = None
    with open(path, "r") as f:
        first = f.readline()
    if "sigma=" in first:
        try:
            sigma = float(first.split("sigma=")[1].rstrip(")\n "))
        except ValueError:
            sigma = None
    if sigma is None:
        sigma = float(np.sqrt(np.sum(ells**2 * weights)))

    return SpiralSpectrum(l_max=l_max, weights=_freeze(weights), sigma=sigma)
