"""Tests for bias calibration and the grating-depth sweep."""

import math
from dataclasses import replace

import numpy as np
import pytest

from src.calibration import CalibrationRecord, calibrate, calibrate_from_bits, measure_grating_sweep, sweep_frame
from src.config import BENCH_BALANCE_DEPTH, BENCH_BIAS_RATIO
from src.exceptions import DegenerateInputError, ParameterError
from src.hologram import SplitterConfig, two_arm_probabilities
from src.photon_sim import ExperimentConfig


@pytest.fixture(scope="module")
def record():
    return calibrate(BENCH_BIAS_RATIO)


def test_calibration_of_measured_bias(record):
    assert record.arm == "B1"
    assert record.M_star == pytest.approx(0.78096, abs=5e-5)
    assert record.M_quantized == pytest.approx(200 / 256)
    assert record.M_quantized == pytest.approx(BENCH_BALANCE_DEPTH, abs=1e-4)
    assert 0.9987 <= record.H_min_predicted <= 1.0
    assert record.dH_min == pytest.approx(0.004192, rel=2e-3)
    assert record.R_corrected == pytest.approx(0.9996, abs=2e-4)
    assert record.grey_levels == 256
    assert record.R_sigma is None


def test_depths_attenuate_favoured_arm(record):
    assert record.depths() == (1.0, record.M_quantized)


def test_apply_balances_splitter(record):
    splitter = record.apply(SplitterConfig(bias_ratio_R=BENCH_BIAS_RATIO))
    assert splitter.bias_ratio_R == BENCH_BIAS_RATIO
    assert splitter.depth_M0 == 1.0
    assert splitter.depth_M1 == record.M_quantized
    p0, p1 = splitter.bit_probabilities()
    assert p0 / p1 == pytest.approx(record.R_corrected)


def test_inverse_bias_attenuates_b0(record):
    mirrored = calibrate(1.0 / BENCH_BIAS_RATIO)
    assert mirrored.arm == "B0"
    assert mirrored.M_star == pytest.approx(record.M_star)
    assert mirrored.M_quantized == record.M_quantized
    assert mirrored.depths() == (record.M_quantized, 1.0)
    assert mirrored.R_corrected == pytest.approx(1.0 / record.R_corrected)
    assert mirrored.H_min_predicted == pytest.approx(record.H_min_predicted)


def test_balanced_source_needs_no_attenuation():
    balanced = calibrate(1.0)
    assert balanced.M_star == 1.0
    assert balanced.M_quantized == 1.0
    assert balanced.H_min_predicted == pytest.approx(1.0)
    assert balanced.R_corrected == pytest.approx(1.0)


@pytest.mark.parametrize("grey_levels", [16, 64, 1024])
def test_coarser_slm_predicts_from_quantized_depth(grey_levels):
    cal = calibrate(BENCH_BIAS_RATIO, grey_levels=grey_levels)
    assert cal.M_quantized * grey_levels == pytest.approx(round(cal.M_quantized * grey_levels))
    assert abs(cal.M_quantized - cal.M_star) <= 0.5 / grey_levels + 1e-12
    p0, p1 = two_arm_probabilities(BENCH_BIAS_RATIO, 1.0, cal.M_quantized)
    assert cal.H_min_predicted == pytest.approx(-math.log2(max(p0, p1)))


def test_invalid_ratio_rejected():
    with pytest.raises(ParameterError):
        calibrate(0.0)


def test_record_serializes_every_field(record):
    data = record.to_dict()
    assert set(data) == {
        "R",
        "arm",
        "M_star",
        "M_quantized",
        "H_min_predicted",
        "dH_min",
        "R_corrected",
        "grey_levels",
        "R_sigma",
    }
    assert CalibrationRecord(**data) == record


def test_calibrate_from_counts_carries_uncertainty():
    cal = calibrate_from_bits((8518, 10000))
    assert cal.R == pytest.approx(BENCH_BIAS_RATIO)
    assert cal.R_sigma is not None and cal.R_sigma > 0
    assert cal.M_quantized == pytest.approx(200 / 256)


def test_calibrate_from_bit_array():
    bits = np.array([0] * 40 + [1] * 60, dtype=np.uint8)
    cal = calibrate_from_bits(bits)
    assert cal.R == pytest.approx(40 / 60)
    assert cal.arm == "B1"


def test_calibrate_from_one_sided_bits_fails():
    with pytest.raises(DegenerateInputError):
        calibrate_from_bits(np.zeros(100, dtype=np.uint8))


@pytest.fixture(scope="module")
def sweep_config():
    return ExperimentConfig(
        duration_s=0.2,
        dark_rate_hz=(0.0, 0.0, 0.0),
        splitter=SplitterConfig(bias_ratio_R=BENCH_BIAS_RATIO),
        seed=5,
    )


def test_grating_sweep_tracks_theory(sweep_config):
    depths = [0.6, 200 / 256, 1.0]
    points = measure_grating_sweep(sweep_config, depths)
    assert [p.depth_M for p in points] == depths
    for point in points:
        assert point.n_bits > 3000
        assert abs(point.H_min_hat - point.H_min_theory) < 5 * point.H_min_sigma + 1e-3
    assert points[0].H_min_theory < points[1].H_min_theory


def test_grating_sweep_with_dark_arm_reports_zero_entropy(sweep_config):
    (point,) = measure_grating_sweep(sweep_config, [0.0])
    assert point.n_bits > 0
    assert point.H_min_hat == 0.0
    assert math.isnan(point.R_hat)
    assert point.H_min_theory == pytest.approx(0.0)


def test_grating_sweep_is_reproducible(sweep_config):
    short = replace(sweep_config, duration_s=0.02)
    assert measure_grating_sweep(short, [0.9]) == measure_grating_sweep(short, [0.9])


def test_sweep_frame_columns(sweep_config):
    points = measure_grating_sweep(replace(sweep_config, duration_s=0.02), [0.8, 1.0])
    frame = sweep_frame(points)
    assert list(frame.columns) == ["depth_M", "n_bits", "R_hat", "H_min_hat", "H_min_sigma", "H_min_theory"]
    assert len(frame) == 2


def test_apply_keeps_source_bias():
    cal = calibrate(0.8)
    splitter = cal.apply(SplitterConfig(bias_ratio_R=0.85, grey_levels=256))
    assert splitter.bias_ratio_R == 0.85
    assert splitter.depth_M1 == cal.M_quantized
