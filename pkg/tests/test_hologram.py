"""Tests for grating efficiency, balance depth and depth quantization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from src.config import BENCH_BIAS_RATIO
from src.exceptions import ArmRoleError, ParameterError
from src.hologram import (
    SplitterConfig,
    analytic_entropy_slope,
    bisection,
    diffraction_efficiency,
    entropy_slope,
    min_entropy_grid,
    min_entropy_surface,
    quantize_depth,
    quantized_entropy_error,
    rebalanced_probabilities,
    solve_balance_depth,
    two_arm_probabilities,
)

depths = st.floats(min_value=0.0, max_value=1.0)
ratios = st.floats(min_value=0.01, max_value=100.0)


@pytest.mark.parametrize(
    "order_n, depth_M, expected",
    [
        (1, 1.0, 1.0),
        (1, 0.0, 0.0),
        (0, 0.0, 1.0),
        (0, 1.0, 0.0),
        (1, 0.5, (2 / math.pi) ** 2),
        (0, 0.5, (2 / math.pi) ** 2),
        (-1, 0.5, (2 / (3 * math.pi)) ** 2),
    ],
)
def test_diffraction_efficiency_golden(order_n, depth_M, expected):
    assert diffraction_efficiency(order_n, depth_M) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("depth_M", [-0.01, 1.01])
def test_depth_outside_unit_interval_rejected(depth_M):
    with pytest.raises(ParameterError):
        diffraction_efficiency(1, depth_M)


@settings(max_examples=30, deadline=None)
@given(depth_M=depths)
def test_orders_share_all_light(depth_M):
    total = sum(diffraction_efficiency(n, depth_M) for n in range(-400, 401))
    assert total == pytest.approx(1.0, abs=2e-3)


@settings(deadline=None)
@given(R=ratios, M0=depths, M1=depths)
def test_two_arm_probabilities_normalized_and_mirror_symmetric(R, M0, M1):
    if diffraction_efficiency(1, M0) == 0 and diffraction_efficiency(1, M1) == 0:
        return
    p0, p1 = two_arm_probabilities(R, M0, M1)
    assert p0 + p1 == pytest.approx(1.0)
    q0, q1 = two_arm_probabilities(1.0 / R, M1, M0)
    assert p0 == pytest.approx(q1, abs=1e-12)


def test_dark_gratings_rejected():
    with pytest.raises(ParameterError):
        two_arm_probabilities(1.0, 0.0, 0.0)


def test_rebalanced_probabilities_at_full_depth():
    p0, p1 = rebalanced_probabilities(BENCH_BIAS_RATIO, 1.0)
    assert p0 == pytest.approx(BENCH_BIAS_RATIO / (1 + BENCH_BIAS_RATIO))
    assert min_entropy_surface(BENCH_BIAS_RATIO, 1.0) == pytest.approx(-math.log2(p1))
    assert min_entropy_surface(BENCH_BIAS_RATIO, 1.0) == pytest.approx(0.88896, abs=1e-4)


def test_bisection_finds_root():
    root = bisection(lambda x: x * x - 2.0, 0.0, 2.0, 1e-12)
    assert root == pytest.approx(math.sqrt(2.0), abs=1e-9)


def test_bisection_returns_exact_endpoint_root():
    assert bisection(lambda x: x, 0.0, 1.0, 1e-12) == 0.0


def test_bisection_requires_sign_change():
    with pytest.raises(ParameterError):
        bisection(lambda x: x * x + 1.0, -1.0, 1.0, 1e-12)


def test_balance_depth_for_measured_bias():
    M_star = solve_balance_depth(BENCH_BIAS_RATIO)
    assert M_star == pytest.approx(0.78096, abs=2e-4)
    assert diffraction_efficiency(1, M_star) == pytest.approx(BENCH_BIAS_RATIO, abs=1e-10)
    p0, p1 = rebalanced_probabilities(BENCH_BIAS_RATIO, M_star)
    assert p0 == pytest.approx(0.5, abs=1e-10)
    assert min_entropy_surface(BENCH_BIAS_RATIO, M_star) == pytest.approx(1.0, abs=1e-9)


def test_balanced_source_needs_no_attenuation():
    assert solve_balance_depth(1.0) == 1.0


def test_bias_favouring_b0_is_a_role_error():
    with pytest.raises(ArmRoleError):
        solve_balance_depth(1.2)


@pytest.mark.parametrize("R", [0.0, -0.5])
def test_non_positive_bias_rejected(R):
    with pytest.raises(ParameterError):
        solve_balance_depth(R)


@settings(deadline=None)
@given(R=st.floats(min_value=1e-4, max_value=1.0))
def test_balance_depth_solves_condition(R):
    M = solve_balance_depth(R)
    assert 0.0 <= M <= 1.0
    assert diffraction_efficiency(1, M) == pytest.approx(R, abs=1e-9)


@settings(deadline=None)
@given(a=st.floats(min_value=0.01, max_value=0.99), b=st.floats(min_value=0.01, max_value=0.99))
def test_balance_depth_increases_with_ratio(a, b):
    lo, hi = sorted((a, b))
    assert solve_balance_depth(lo) <= solve_balance_depth(hi) + 1e-12


@pytest.mark.parametrize(
    "depth_M, expected",
    [
        (0.78096, 200 / 256),
        (0.5 / 256, 1 / 256),
        (0.49 / 256, 0.0),
        (1.0, 1.0),
        (0.0, 0.0),
    ],
)
def test_quantize_depth(depth_M, expected):
    assert quantize_depth(depth_M) == expected


def test_quantize_depth_coarse_slm():
    assert quantize_depth(0.3, grey_levels=4) == 0.25
    assert quantize_depth(0.375, grey_levels=4) == 0.5


def test_quantized_depth_keeps_entropy_near_one():
    M_q = quantize_depth(solve_balance_depth(BENCH_BIAS_RATIO))
    assert 0.9987 <= min_entropy_surface(BENCH_BIAS_RATIO, M_q) <= 1.0


def test_quantization_entropy_error_for_measured_bias():
    M_star = solve_balance_depth(BENCH_BIAS_RATIO)
    slope = entropy_slope(BENCH_BIAS_RATIO, M_star, side="below")
    assert slope == pytest.approx(1.07318, rel=2e-3)
    assert quantized_entropy_error(BENCH_BIAS_RATIO, M_star) == pytest.approx(0.004192, rel=2e-3)


@pytest.mark.parametrize("R, depth_M", [(0.8518, 0.6), (0.8518, 0.95), (0.5, 0.3), (0.5, 0.9)])
@pytest.mark.parametrize("side", ["below", "above"])
def test_finite_difference_slope_matches_analytic(R, depth_M, side):
    assert entropy_slope(R, depth_M, side) == pytest.approx(analytic_entropy_slope(R, depth_M, side), rel=1e-4)


def test_slope_has_a_kink_at_balance():
    M_star = solve_balance_depth(BENCH_BIAS_RATIO)
    below = analytic_entropy_slope(BENCH_BIAS_RATIO, M_star - 1e-4, "below")
    above = analytic_entropy_slope(BENCH_BIAS_RATIO, M_star + 1e-4, "above")
    assert below > 0 > above


def test_slope_step_stays_inside_interval():
    assert np.isfinite(entropy_slope(0.5, 0.0, side="below"))
    assert np.isfinite(entropy_slope(0.5, 1.0, side="above"))


def test_slope_side_validated():
    with pytest.raises(ParameterError):
        entropy_slope(0.5, 0.5, side="central")
    with pytest.raises(ParameterError):
        analytic_entropy_slope(0.5, 0.5, side="central")


def test_min_entropy_grid_matches_pointwise_surface():
    R_values = np.array([0.5, 0.8518, 1.0])
    M_values = np.linspace(0.05, 1.0, 20)
    grid = min_entropy_grid(R_values, M_values)
    assert grid.shape == (3, 20)
    expected = [[min_entropy_surface(R, M) for M in M_values] for R in R_values]
    assert_allclose(grid, expected, rtol=1e-12)
    assert np.all((grid >= 0) & (grid <= 1))


def test_min_entropy_grid_validates_inputs():
    with pytest.raises(ParameterError):
        min_entropy_grid(np.array([0.0]), np.array([0.5]))
    with pytest.raises(ParameterError):
        min_entropy_grid(np.array([1.0]), np.array([1.5]))


def test_splitter_config_probabilities():
    splitter = SplitterConfig(bias_ratio_R=BENCH_BIAS_RATIO, depth_M1=0.78096)
    p0, p1 = splitter.path_probabilities()
    assert p0 / p1 == pytest.approx(BENCH_BIAS_RATIO)
    s0, s1 = splitter.grating_efficiencies()
    assert s0 == 1.0
    assert s1 == pytest.approx(BENCH_BIAS_RATIO, abs=1e-4)
    assert splitter.bit_probabilities()[0] == pytest.approx(0.5, abs=1e-4)
    assert splitter.quantized().depth_M1 == 200 / 256


@pytest.mark.parametrize(
    "kwargs",
    [{"bias_ratio_R": 0.0}, {"depth_M0": 1.5}, {"depth_M1": -0.1}, {"grey_levels": 0}],
)
def test_splitter_config_validation(kwargs):
    with pytest.raises(ParameterError):
        SplitterConfig(**kwargs)
