"""Command-line front end for the QRNG pipeline.

Subcommands: simulate, extract, calibrate, test, oam-scan, figures.

Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 a statistical test failed.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from .artifacts import atomic_write_text
from .bit_io import BIT_FORMATS, read_bits, write_bits
from .calibration import CalibrationRecord, calibrate, calibrate_from_bits, measure_grating_sweep, sweep_frame
from .coincidence import AmbiguityPolicy, BitString, CoincidenceParams, extract_file
from .config import BENCH_BIAS_RATIO, DEFAULT_L_A_CUTOFF, DEFAULT_L_MAX, DEFAULT_SIGMA, SLM_GREY_LEVELS, TOOL_VERSION
from .entropy import entropy_report
from .exceptions import ConfigError, DegenerateInputError, QrngError, TagParseError
from .experiment_config import RunSettings, load_config
from .hologram import min_entropy_grid
from .oam_scan import (
    entropy_rate_surface,
    load_spiral_csv,
    measure_spiral_bandwidth,
    normalized_counts,
    predict_spiral_bandwidth,
    save_spiral_csv,
    save_surface_csv,
    surface_frame,
)
from .photon_sim import ProjectionSetting, simulate
from .run_manifest import RunManifest
from .spdc_model import gaussian_spectrum
from .stattests import SUITES, run_suite
from .time_tags import write_tags

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_TEST_FAILURE = 4


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _write_json(path: Path, data: dict[str, Any]) -> None:
    atomic_write_text(path, json.dumps(data, indent=2) + "\n")


def _write_frame(path: Path, frame: pd.DataFrame) -> None:
    atomic_write_text(path, frame.to_csv(index=False))


def _manifest_arguments(args: argparse.Namespace) -> dict[str, Any]:
    """Command-line arguments as plain YAML-safe values."""
    plain: dict[str, Any] = {}
    for key, value in vars(args).items():
        if key == "func":
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, (list, tuple)):
            value = [str(v) if isinstance(v, Path) else v for v in value]
        plain[key] = value
    return plain


def _record(
    args: argparse.Namespace,
    out_dir: Path,
    outputs: list[Path],
    settings: Optional[RunSettings] = None,
    seed: Optional[int] = None,
) -> None:
    manifest = RunManifest(out_dir)
    manifest.record(
        args.command,
        _manifest_arguments(args),
        outputs,
        config=settings.document if settings is not None else None,
        seed=seed,
    )


def _coincidence_params(args: argparse.Namespace, settings: RunSettings) -> CoincidenceParams:
    window_ps = int(round(args.window_ns * 1000)) if args.window_ns is not None else settings.coincidence.window_ps
    policy = AmbiguityPolicy(args.policy) if args.policy is not None else settings.coincidence.policy
    return CoincidenceParams(window_ps=window_ps, policy=policy)


def _load_calibration(path: Path) -> CalibrationRecord:
    with open(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid calibration JSON: {e}") from e
    try:
        return CalibrationRecord(**data)
    except TypeError as e:
        raise ConfigError(f"{path}: not a calibration record: {e}") from e


def _bit_report(bits: BitString, params: CoincidenceParams) -> dict[str, Any]:
    """Entropy report plus extraction bookkeeping."""
    try:
        report = entropy_report(bits)
    except DegenerateInputError:
        report = {
            "n0": bits.n_coincidences_0,
            "n1": bits.n_coincidences_1,
            "R_hat": None,
            "R_sigma": None,
            "H_shannon": None,
            "H_min": None,
            "H_min_sigma": None,
        }
    report.update(
        {
            "n_bits": len(bits),
            "n_ambiguous_discarded": bits.n_ambiguous_discarded,
            "n_unmatched_events": bits.n_unmatched_events,
            "duration_s": bits.duration_s,
            "bit_rate_hz": bits.bit_rate_hz,
            "window_ps": params.window_ps,
            "policy": params.policy.value,
        }
    )
    return report


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simulate an acquisition and write a QTAG time-tag file."""
    settings = load_config(args.config).with_seed(args.seed)
    experiment = settings.experiment
    if args.duration is not None:
        experiment = replace(experiment, duration_s=args.duration)
    if args.calibration is not None:
        record = _load_calibration(args.calibration)
        experiment = replace(experiment, splitter=record.apply(experiment.splitter))

    print("=== Simulating Acquisition ===")
    splitter = experiment.splitter
    print(f"R = {splitter.bias_ratio_R}, M0 = {splitter.depth_M0:.6f}, M1 = {splitter.depth_M1:.6f}")
    print(f"Expected bit rate: {experiment.expected_coincidence_hz():.1f} Hz")
    stream = simulate(experiment, verbose=True)

    out = Path(args.out)
    write_tags(stream, out)
    print(f"✓ wrote {out} ({len(stream)} events)")
    _record(args, out.parent, [out], settings, experiment.seed)
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    """Extract the bit string and its entropy report from a QTAG file."""
    settings = load_config(args.config)
    params = _coincidence_params(args, settings)

    print("=== Extracting Coincidences ===")
    print(f"Window: {params.window_ps} ps, policy: {params.policy.value}")
    bits = extract_file(args.tags, params, verbose=args.verbose)

    out = Path(args.out)
    report_path = Path(args.report) if args.report else out.with_suffix(".entropy.json")
    write_bits(bits.bits, out, args.format)
    report = _bit_report(bits, params)
    _write_json(report_path, report)

    print(f"✓ wrote {out} ({len(bits)} bits, {bits.bit_rate_hz:.1f} bits/s)")
    if report["H_min"] is not None:
        bias = f"R = {report['R_hat']:.4f} ± {report['R_sigma']:.4f}"
        print(f"  {bias}, H_min = {report['H_min']:.4f} ± {report['H_min_sigma']:.4f}")
    else:
        print("⚠ Only one bit value observed, no entropy estimate")
    if bits.n_ambiguous_discarded:
        print(f"  {bits.n_ambiguous_discarded} ambiguous heralds discarded")

    outputs = [out, report_path]
    if args.format == "packed":
        outputs.insert(1, out.with_name(out.name + ".nbits"))
    _record(args, out.parent, outputs, settings)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    """Measure or take a bias ratio and solve the balancing grating depth."""
    settings = load_config(args.config)
    grey_levels = args.grey_levels or settings.experiment.splitter.grey_levels

    print("=== Calibrating Splitter ===")
    if args.R is not None:
        record = calibrate(args.R, grey_levels)
    elif args.bits is not None:
        record = calibrate_from_bits(read_bits(args.bits, args.format), grey_levels)
    else:
        params = _coincidence_params(args, settings)
        record = calibrate_from_bits(extract_file(args.tags, params), grey_levels)

    out = Path(args.out)
    _write_json(out, record.to_dict())
    sigma = f" ± {record.R_sigma:.4f}" if record.R_sigma is not None else ""
    print(f"R = {record.R:.4f}{sigma}: attenuate arm {record.arm}")
    print(f"M* = {record.M_star:.6f}, displayed M = {record.M_quantized:.6f} ({grey_levels} grey levels)")
    print(f"Predicted H_min = {record.H_min_predicted:.5f} ± {record.dH_min:.5f}, R' = {record.R_corrected:.5f}")
    print(f"✓ wrote {out}")
    _record(args, out.parent, [out], settings)
    return EXIT_OK


def cmd_test(args: argparse.Namespace) -> int:
    """Run the randomness test battery on a bit file."""
    settings = load_config(args.config)
    alpha = args.alpha if args.alpha is not None else settings.alpha
    suite = args.suite or settings.suite
    bits = read_bits(args.bits, args.format)

    print(f"=== Running {suite} test suite on {len(bits)} bits (alpha = {alpha}) ===")
    report = run_suite(bits, alpha=alpha, suite=suite, n_jobs=args.n_jobs)
    print(report.to_table())

    out = Path(args.out)
    table_path = out.with_suffix(".txt")
    atomic_write_text(out, report.to_json() + "\n")
    atomic_write_text(table_path, report.to_table() + "\n")
    _record(args, out.parent, [out, table_path], settings)

    if not report.executed:
        print("⚠ Sequence too short: every test was skipped")
    if report.failed:
        print(f"\n⚠ {len(report.failed)} of {len(report.executed)} test results below alpha")
        return EXIT_TEST_FAILURE
    print(f"\n✓ All {len(report.executed)} executed test results passed")
    return EXIT_OK


def cmd_oam_scan(args: argparse.Namespace) -> int:
    """Spiral-bandwidth scan plus the entropy/rate surface derived from it."""
    settings = load_config(args.config).with_seed(args.seed)
    experiment = settings.experiment
    if experiment.projection is None:
        spectrum = gaussian_spectrum(DEFAULT_SIGMA, DEFAULT_L_MAX)
        experiment = replace(experiment, projection=ProjectionSetting(spectrum, 0, 0))

    lo, hi = args.l1_range
    l_range = (min(lo, args.l0), max(hi, args.l0))
    out_dir = Path(args.out)

    print("=== OAM Spiral Bandwidth Scan ===")
    if args.predict:
        data = predict_spiral_bandwidth(experiment, l_range, args.dwell)
    else:
        data = measure_spiral_bandwidth(
            experiment, l_range, args.dwell, params=settings.coincidence, n_jobs=args.n_jobs, verbose=True
        )
    spiral_path = out_dir / "spiral_bandwidth.csv"
    save_spiral_csv(data, spiral_path)
    print(f"✓ wrote {spiral_path}")

    print("\n=== Entropy / Rate Surface ===")
    surface = entropy_rate_surface(data, l_A_cutoff=args.l_a_cutoff)
    surface_path = out_dir / "surface.csv"
    save_surface_csv(surface, surface_path)

    series = entropy_rate_surface(data, (args.l0, args.l0), (lo, hi), l_A_cutoff=args.l_a_cutoff)
    series_path = out_dir / f"surface_lB0_{args.l0}.csv"
    save_surface_csv(series, series_path)
    for point in series:
        rate = f"rate = {point.normalized_rate:.3f}"
        print(f"  l_B1 = {point.l_B1:+3d}: p0 = {point.p0_given:.4f}, H_min = {point.hmin:.4f}, {rate}")
    print(f"✓ wrote {surface_path} and {series_path}")

    _record(args, out_dir, [spiral_path, surface_path, series_path], settings, experiment.seed)
    return EXIT_OK


def cmd_figures(args: argparse.Namespace) -> int:
    """Write x,y[,z] plot-data CSVs for the bias, calibration and OAM figures."""
    settings = load_config(args.config).with_seed(args.seed)
    out_dir = Path(args.out)
    outputs: list[Path] = []

    print("=== Writing Figure Data ===")
    if args.reports:
        rows = []
        for report_path in args.reports:
            with open(report_path, "r") as f:
                try:
                    records = json.load(f)["records"]
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ConfigError(f"{report_path}: not a test report: {e}") from e
            for record in records:
                rows.append(
                    {
                        "report": Path(report_path).stem,
                        "test": record.get("name"),
                        "variant": record.get("variant", ""),
                        "p_value": record.get("p_value"),
                        "pass": record.get("pass"),
                    }
                )
        path = out_dir / "fig2_pvalues.csv"
        _write_frame(path, pd.DataFrame(rows))
        outputs.append(path)

    depths = np.arange(SLM_GREY_LEVELS + 1) / SLM_GREY_LEVELS
    curve = min_entropy_grid(np.array([args.R]), depths)[0]
    path = out_dir / "fig3_min_entropy.csv"
    _write_frame(path, pd.DataFrame({"M": depths, "H_min": curve}))
    outputs.append(path)

    ratios = np.linspace(0.5, 1.0, 51)
    grid = min_entropy_grid(ratios, depths)
    R_mesh, M_mesh = np.meshgrid(ratios, depths, indexing="ij")
    path = out_dir / "fig3_surface.csv"
    _write_frame(path, pd.DataFrame({"R": R_mesh.ravel(), "M": M_mesh.ravel(), "H_min": grid.ravel()}))
    outputs.append(path)

    if args.sweep_points:
        experiment = replace(settings.experiment, splitter=replace(settings.experiment.splitter, bias_ratio_R=args.R))
        sweep = measure_grating_sweep(
            experiment, np.linspace(0.5, 1.0, args.sweep_points), settings.coincidence, verbose=True
        )
        path = out_dir / "fig3_measured.csv"
        _write_frame(path, sweep_frame(sweep))
        outputs.append(path)

    if args.spiral is not None:
        data = load_spiral_csv(args.spiral)
        normalized = normalized_counts(data)
        frame = data.to_frame().drop(columns=["acquisition_s"])
        frame["normalized"] = normalized.ravel()
        path = out_dir / "fig4_spiral.csv"
        _write_frame(path, frame)
        outputs.append(path)

        path = out_dir / "fig5_surface.csv"
        _write_frame(path, surface_frame(entropy_rate_surface(data, l_A_cutoff=args.l_a_cutoff)))
        outputs.append(path)

    for path in outputs:
        print(f"✓ wrote {path}")
    _record(args, out_dir, outputs, settings, settings.experiment.seed)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, out_default: str, seeded: bool = False) -> None:
    parser.add_argument("--config", type=Path, help="YAML experiment config")
    if seeded:
        parser.add_argument("--seed", type=int, help="Root seed (overrides the config)")
    parser.add_argument("--out", default=out_default, help=f"Output path (default: {out_default})")


def _add_coincidence(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window-ns", type=float, help="Coincidence window in ns (default: config or 25)")
    parser.add_argument("--policy", choices=[p.value for p in AmbiguityPolicy], help="Ambiguity policy")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per pipeline stage."""
    parser = _ArgumentParser(prog="qrng", description="Holographic quantum random number generator pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Simulate a time-tag file")
    _add_common(p, "tags.qtag", seeded=True)
    p.add_argument("--duration", type=float, help="Acquisition time in seconds (overrides the config)")
    p.add_argument("--calibration", type=Path, help="Calibration JSON whose grating depths to apply")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", help="Extract bits from a time-tag file")
    p.add_argument("tags", type=Path, help="QTAG time-tag file")
    _add_common(p, "bits.txt")
    _add_coincidence(p)
    p.add_argument("--format", choices=BIT_FORMATS, default="ascii", help="Bit file format")
    p.add_argument("--report", help="Entropy report path (default: <out> with suffix .entropy.json)")
    p.add_argument("--verbose", action="store_true", help="Print per-chunk progress")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("calibrate", help="Solve the balancing grating depth")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--R", type=float, help="Bias ratio p0/p1")
    source.add_argument("--tags", type=Path, help="Time-tag file of the uncorrected setup")
    source.add_argument("--bits", type=Path, help="Bit file of the uncorrected setup")
    _add_common(p, "calibration.json")
    _add_coincidence(p)
    p.add_argument("--format", choices=BIT_FORMATS, default="ascii", help="Format of --bits")
    p.add_argument("--grey-levels", type=int, help="SLM grey levels (default: config or 256)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("test", help="Run the statistical test battery")
    p.add_argument("bits", type=Path, help="Bit file")
    _add_common(p, "test_report.json")
    p.add_argument("--format", choices=BIT_FORMATS, default="ascii", help="Bit file format")
    p.add_argument("--alpha", type=float, help="Significance level (default: config or 0.01)")
    p.add_argument("--suite", choices=sorted(SUITES), help="Test suite (default: config or core)")
    p.add_argument("--n-jobs", type=int, default=1, help="Parallel workers")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("oam-scan", help="Spiral-bandwidth scan and entropy surface")
    _add_common(p, "oam_scan", seeded=True)
    p.add_argument("--l0", type=int, default=4, help="Fixed B0 projection for the surface slice")
    p.add_argument("--l1-range", type=int, nargs=2, default=[-20, 20], metavar=("LO", "HI"), help="l_B1 range")
    p.add_argument("--dwell", type=float, default=0.01, help="Acquisition per scan point in seconds")
    p.add_argument("--predict", action="store_true", help="Use closed-form counts instead of simulation")
    p.add_argument("--l-a-cutoff", type=int, default=DEFAULT_L_A_CUTOFF, help="|l_A| cutoff for the trace")
    p.add_argument("--n-jobs", type=int, default=1, help="Parallel workers")
    p.set_defaults(func=cmd_oam_scan)

    p = sub.add_parser("figures", help="Write plot-data CSVs")
    _add_common(p, "figures", seeded=True)
    p.add_argument("--reports", type=Path, nargs="*", default=[], help="Test report JSONs to tabulate")
    p.add_argument("--spiral", type=Path, help="Spiral-bandwidth CSV")
    p.add_argument("--R", type=float, default=BENCH_BIAS_RATIO, help="Bias ratio for the depth curve")
    p.add_argument("--sweep-points", type=int, default=0, help="Simulated grating depths to measure")
    p.add_argument("--l-a-cutoff", type=int, default=DEFAULT_L_A_CUTOFF, help="|l_A| cutoff for the trace")
    p.set_defaults(func=cmd_figures)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and map failures to exit codes.

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, TagParseError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_IO
    except (QrngError, yaml.YAMLError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
