#!/usr/bin/env python3
"""
End-to-end holographic QRNG run: biased bench, calibration, balanced bench, OAM tailoring.

Simulates the uncorrected splitter, measures its bias from the extracted
bits, solves and quantizes the balancing grating depth, regenerates with the
calibrated hologram and runs the test battery on both bit strings. Finally
tailors the bias with OAM projections on the spiral spectrum.

Usage:
    python run_pipeline.py [duration_seconds] [seed]

Example:
    python run_pipeline.py            # 1 s per acquisition, seed 1
    python run_pipeline.py 10 7       # 10 s per acquisition, seed 7
"""

import sys
from dataclasses import replace

from src import (
    ExperimentConfig,
    ProjectionSetting,
    SplitterConfig,
    calibrate_from_bits,
    derive_seed,
    entropy_report,
    entropy_rate_surface,
    extract_bits,
    gaussian_spectrum,
    predict_spiral_bandwidth,
    run_suite,
    simulate,
    tailor_bias,
)
from src.config import BENCH_BIAS_RATIO, DEFAULT_L_MAX, DEFAULT_SIGMA
from src.oam_scan import measure_projection_series

duration_s = float(sys.argv[1]) if len(sys.argv) >= 2 else 1.0
seed = int(sys.argv[2]) if len(sys.argv) >= 3 else 1

biased = ExperimentConfig(
    duration_s=duration_s,
    splitter=SplitterConfig(bias_ratio_R=BENCH_BIAS_RATIO),
    seed=derive_seed(seed, 0),
)

print("=== Uncorrected Splitter ===")
print(f"R = {BENCH_BIAS_RATIO}, expected bit rate {biased.expected_coincidence_hz():.0f} Hz")
raw_bits = extract_bits(simulate(biased, verbose=True))
raw = entropy_report(raw_bits)
print(f"{len(raw_bits)} bits: R = {raw['R_hat']:.4f} ± {raw['R_sigma']:.4f}, H_min = {raw['H_min']:.4f}")

print("\n=== Calibration ===")
record = calibrate_from_bits(raw_bits)
print(f"Attenuate {record.arm}: M* = {record.M_star:.5f}, displayed M = {record.M_quantized:.5f}")
print(f"Predicted H_min = {record.H_min_predicted:.5f} ± {record.dH_min:.5f}")

balanced = replace(biased, splitter=record.apply(biased.splitter), seed=derive_seed(seed, 1))

print("\n=== Calibrated Splitter ===")
bits = extract_bits(simulate(balanced, verbose=True))
report = entropy_report(bits)
print(f"{len(bits)} bits: R = {report['R_hat']:.4f} ± {report['R_sigma']:.4f}, H_min = {report['H_min']:.4f}")

print("\n=== Test Battery ===")
for label, bit_string in (("uncorrected", raw_bits), ("calibrated", bits)):
    suite = run_suite(bit_string.bits)
    passed = len(suite.executed) - len(suite.failed)
    print(f"\n{label}: {passed}/{len(suite.executed)} results pass (alpha = {suite.alpha})")
    print(suite.to_table())

print("\n=== OAM Bias Tailoring ===")
spectrum = gaussian_spectrum(DEFAULT_SIGMA, DEFAULT_L_MAX)
oam = ExperimentConfig(
    duration_s=duration_s,
    dark_rate_hz=0.0,
    projection=ProjectionSetting(spectrum, 4, 4),
    seed=derive_seed(seed, 2),
)
predicted = predict_spiral_bandwidth(oam, (-20, 20), duration_s)
for point in entropy_rate_surface(predicted, (4, 4), (4, 16)):
    if point.l_B1 % 4 == 0:
        print(f"  l_B1 = {point.l_B1:+3d}: calc H_min = {point.hmin:.4f}, rate = {point.normalized_rate:.3f}")

l_B1 = tailor_bias(spectrum, 0.6, l_B0=4)
print(f"Target p0 = 0.6 -> project B1 onto l = {l_B1}")
for point in measure_projection_series(oam, 4, [4, l_B1], verbose=True):
    print(f"  ({point.l_B0}, {point.l_B1}): p0 = {point.p0_hat:.4f}, {point.bit_rate_hz:.0f} bits/s")

print("\n=== Summary ===")
print(f"{'':<12} {'bits':>9} {'bits/s':>10} {'R':>8} {'H_min':>8}")
for label, bit_string, rep in (("uncorrected", raw_bits, raw), ("calibrated", bits, report)):
    print(f"{label:<12} {len(bit_string):>9} {bit_string.bit_rate_hz:>10.1f} {rep['R_hat']:>8.4f} {rep['H_min']:>8.4f}")
