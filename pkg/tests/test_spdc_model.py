"""Tests for the OAM spiral spectrum and joint projections."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from src.config import DEFAULT_SIGMA, SPIRAL_FWHM
from src.exceptions import ParameterError, SpectrumRangeError, TruncationError
from src.spdc_model import (
    gaussian_spectrum,
    joint_projection_matrix,
    joint_projection_probability,
    load_spectrum,
    marginal_projection_weight,
    marginal_weights,
    save_spectrum,
    sigma_from_fwhm,
)


@pytest.fixture(scope="module")
def spectrum():
    return gaussian_spectrum(8.069, 50)


def test_default_sigma_matches_fwhm():
    assert DEFAULT_SIGMA == pytest.approx(8.069, abs=1e-3)
    assert sigma_from_fwhm(SPIRAL_FWHM) == pytest.approx(DEFAULT_SIGMA)


def test_spectrum_is_normalized_and_symmetric(spectrum):
    assert spectrum.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert_allclose(spectrum.weights, spectrum.weights[::-1])
    assert spectrum.weights.argmax() == spectrum.l_max
    assert len(spectrum.indices) == 101


def test_spectrum_weights_are_read_only(spectrum):
    with pytest.raises(ValueError):
        spectrum.weights[0] = 1.0


def test_fwhm_recovers_generating_width(spectrum):
    assert spectrum.fwhm() == pytest.approx(SPIRAL_FWHM, abs=0.1)


def test_weight_ratio_follows_gaussian(spectrum):
    ratio = spectrum.weight(10) / spectrum.weight(0)
    assert ratio == pytest.approx(np.exp(-100 / (2 * 8.069**2)))


@pytest.mark.parametrize(
    "sigma, l_max, error",
    [
        (0.0, 50, ParameterError),
        (-1.0, 50, ParameterError),
        (1.0, 0, ParameterError),
        (8.069, 40, TruncationError),
    ],
)
def test_invalid_spectrum_parameters(sigma, l_max, error):
    with pytest.raises(error):
        gaussian_spectrum(sigma, l_max)


def test_index_outside_range_raises(spectrum):
    with pytest.raises(SpectrumRangeError):
        spectrum.weight(51)
    with pytest.raises(SpectrumRangeError):
        joint_projection_probability(spectrum, 0, -51)
    with pytest.raises(SpectrumRangeError):
        marginal_projection_weight(spectrum, 60)


def test_joint_projection_conserves_oam(spectrum):
    assert joint_projection_probability(spectrum, -4, 4) == pytest.approx(spectrum.weight(4))
    assert joint_projection_probability(spectrum, 4, 4) == 0.0
    assert joint_projection_probability(spectrum, 0, 1) == 0.0


def test_crosstalk_fraction_outside_unit_interval_raises(spectrum):
    with pytest.raises(ParameterError):
        joint_projection_probability(spectrum, 0, 0, crosstalk=1.0)
    with pytest.raises(ParameterError):
        marginal_projection_weight(spectrum, 0, crosstalk=-0.1)


def test_crosstalk_spreads_weight_to_neighbours(spectrum):
    on_diagonal = joint_projection_probability(spectrum, -3, 3, crosstalk=0.1)
    neighbour = joint_projection_probability(spectrum, -2, 3, crosstalk=0.1)
    far = joint_projection_probability(spectrum, 10, 3, crosstalk=0.1)
    assert 0 < neighbour < on_diagonal
    assert far < 1e-20
    assert on_diagonal < spectrum.weight(3)


def _brute_force_matrix(spec, crosstalk):
    """Explicit double loop over (l_A, l_B)."""
    size = 2 * spec.l_max + 1
    matrix = np.zeros((size, size))
    for i, l_A in enumerate(spec.indices):
        for j, l_B in enumerate(spec.indices):
            matrix[i, j] = joint_projection_probability(spec, int(l_A), int(l_B), crosstalk)
    return matrix


@pytest.mark.parametrize("crosstalk", [0.0, 0.05, 0.3])
def test_joint_matrix_matches_pointwise_probabilities(crosstalk):
    spec = gaussian_spectrum(1.5, 10)
    assert_allclose(joint_projection_matrix(spec, crosstalk), _brute_force_matrix(spec, crosstalk), atol=1e-15)


@pytest.mark.parametrize("crosstalk", [0.0, 0.05, 0.3])
def test_marginals_are_column_sums(crosstalk):
    spec = gaussian_spectrum(1.5, 10)
    matrix = joint_projection_matrix(spec, crosstalk)
    assert_allclose(marginal_weights(spec, crosstalk), matrix.sum(axis=0), rtol=1e-12)


def test_crosstalk_free_matrix_sums_to_one(spectrum):
    assert joint_projection_matrix(spectrum).sum() == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(
    sigma=st.floats(min_value=0.5, max_value=5.0),
    l_B=st.integers(min_value=-30, max_value=30),
    crosstalk=st.floats(min_value=0.0, max_value=0.9),
)
def test_marginal_symmetric_and_bounded(sigma, l_B, crosstalk):
    spec = gaussian_spectrum(sigma, 30)
    weight = marginal_projection_weight(spec, l_B, crosstalk)
    assert 0.0 <= weight <= spec.weight(l_B) + 1e-15
    assert weight == pytest.approx(marginal_projection_weight(spec, -l_B, crosstalk))


def test_spectrum_file_round_trip(tmp_path, spectrum):
    path = tmp_path / "spectrum.txt"
    save_spectrum(spectrum, path)
    loaded = load_spectrum(path)
    assert loaded.l_max == spectrum.l_max
    assert loaded.sigma == pytest.approx(spectrum.sigma)
    assert_allclose(loaded.weights, spectrum.weights, rtol=1e-12)


def test_measured_spectrum_is_renormalized(tmp_path):
    path = tmp_path / "measured.txt"
    path.write_text("-1 2\n0 4\n1 2\n")
    spec = load_spectrum(path)
    assert_allclose(spec.weights, [0.25, 0.5, 0.25])
    assert spec.sigma == pytest.approx(np.sqrt(0.5))


@pytest.mark.parametrize("content", ["-1 1\n1 1\n", "0 1\n1 1\n", "-1 1\n0 -1\n1 1\n", "-1 1 3\n0 1 3\n1 1 3\n"])
def test_malformed_spectrum_file_rejected(tmp_path, content):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    with pytest.raises(ParameterError):
        load_spectrum(path)
