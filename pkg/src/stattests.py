"""Statistical randomness test battery.

Kernels follow the NIST SP 800-22 definitions. Each one takes a 0/1 uint8
array and returns (statistic, p_value) outcomes; `run_suite` applies the
per-test minimum lengths and collects a TestReport.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.special import erfc, gammaincc
from scipy.stats import norm

from .bit_io import validate_bits
from .config import (
    APPROXIMATE_ENTROPY_BLOCK_LEN,
    BLOCK_FREQUENCY_BLOCK_LEN,
    DFT_THRESHOLD_FACTOR,
    LINEAR_COMPLEXITY_BLOCK_LEN,
    MIN_BITS,
    MIN_EXCURSION_CYCLES,
    NON_OVERLAPPING_BLOCKS,
    OVERLAPPING_BLOCK_LEN,
    RANK_MATRIX_SIZE,
    SERIAL_BLOCK_LEN,
    SIGNIFICANCE_ALPHA,
    TEMPLATE_LEN,
)
from .exceptions import ParameterError

CORE_TESTS = (
    "frequency_monobit",
    "block_frequency",
    "runs",
    "longest_run_of_ones",
    "cumulative_sums",
    "dft_spectral",
    "serial",
    "approximate_entropy",
)
FULL_TESTS = CORE_TESTS + (
    "binary_matrix_rank",
    "non_overlapping_template",
    "overlapping_template",
    "maurers_universal",
    "linear_complexity",
    "random_excursions",
    "random_excursions_variant",
)
SUITES = {"core": CORE_TESTS, "full": FULL_TESTS}

# (block length, class upper bounds, class probabilities) by sequence length
LONGEST_RUN_REGIMES = (
    (8, (1, 2, 3), (0.2148, 0.3672, 0.2305, 0.1875)),
    (128, (4, 5, 6, 7, 8), (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (10_000, (10, 11, 12, 13, 14, 15), (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
)

OVERLAPPING_CLASS_PROBS = (0.364091, 0.185659, 0.139381, 0.100571, 0.0704323, 0.139865)

LINEAR_COMPLEXITY_CLASS_PROBS = (0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833)

# Minimum length, block size L, expected value and variance of the statistic
UNIVERSAL_TABLE = (
    (387_840, 6, 5.2177052, 2.954),
    (904_960, 7, 6.1962507, 3.125),
    (2_068_480, 8, 7.1836656, 3.238),
    (4_654_080, 9, 8.1764248, 3.311),
    (10_342_400, 10, 9.1723243, 3.356),
    (22_753_280, 11, 10.170032, 3.384),
    (49_643_520, 12, 11.168765, 3.401),
    (107_560_960, 13, 12.168070, 3.410),
    (231_669_760, 14, 13.167693, 3.416),
    (496_435_200, 15, 14.167488, 3.419),
    (1_059_061_760, 16, 15.167379, 3.421),
)

EXCURSION_STATES = (-4, -3, -2, -1, 1, 2, 3, 4)
EXCURSION_VARIANT_STATES = tuple(x for x in range(-9, 10) if x != 0)


class Outcome(NamedTuple):
    """Statistic and p-value of one test evaluation."""

    statistic: float
    p_value: float


@dataclass(frozen=True)
class TestRecord:
    """
    One line of a test report.

    Attributes:
        name: Test name
        statistic: Test statistic (None when skipped)
        p_value: p-value in [0, 1] (None when skipped)
        passed: p_value >= alpha (None when skipped)
        variant: Sub-case label (direction, template, state)
        note: Reason for skipping
    """

    __test__ = False

    name: str
    statistic: Optional[float]
    p_value: Optional[float]
    passed: Optional[bool]
    variant: str = ""
    note: str = ""

    @property
    def label(self) -> str:
        return f"{self.name}[{self.variant}]" if self.variant else self.name

    @property
    def status(self) -> str:
        if self.passed is None:
            return "SKIPPED"
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "variant": self.variant,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "pass": self.passed,
            "status": self.status.lower(),
            "note": self.note,
        }


@dataclass
class TestReport:
    """
    Results of a suite run.

    Attributes:
        records: Per-test records in suite order
        alpha: Significance level
        n_bits: Length of the tested sequence
        suite: 'core' or 'full'
    """

    __test__ = False

    records: list[TestRecord] = field(default_factory=list)
    alpha: float = SIGNIFICANCE_ALPHA
    n_bits: int = 0
    suite: str = "core"

    @property
    def executed(self) -> list[TestRecord]:
        return [r for r in self.records if r.passed is not None]

    @property
    def failed(self) -> list[TestRecord]:
        return [r for r in self.records if r.passed is False]

    @property
    def suite_pass_count(self) -> int:
        return sum(1 for r in self.records if r.passed)

    @property
    def all_passed(self) -> bool:
        """True when no executed test failed."""
        return not self.failed

    def get(self, name: str, variant: str = "") -> TestRecord:
        """Look up a record by name (and variant)."""
        for record in self.records:
            if record.name == name and record.variant == variant:
                return record
        raise KeyError(f"{name}[{variant}]" if variant else name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "alpha": self.alpha,
            "n_bits": self.n_bits,
            "suite_pass_count": self.suite_pass_count,
            "executed": len(self.executed),
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        """Aligned plain-text table: name, p-value to 6 decimals, verdict."""
        frame = pd.DataFrame(
            {
                "test": [r.label for r in self.records],
                "p_value": ["-" if r.p_value is None else f"{r.p_value:.6f}" for r in self.records],
                "result": [r.status for r in self.records],
            }
        )
        return frame.to_string(index=False)


def _pm_one(bits: np.ndarray) -> np.ndarray:
    return 2 * bits.astype(np.int64) - 1


def _clip_p(p: float) -> float:
    return float(min(1.0, max(0.0, p)))


def _window_values(bits: np.ndarray, m: int, wrap: bool) -> np.ndarray:
    """Integer value of every m-bit window (MSB first)."""
    n = len(bits)
    ext = np.concatenate([bits, bits[: m - 1]]) if wrap else bits
    count = n if wrap else n - m + 1
    values = np.zeros(max(count, 0), dtype=np.int64)
    for j in range(m):
        values = (values << 1) | ext[j : j + count]
    return values


def _pattern_counts(bits: np.ndarray, m: int) -> np.ndarray:
    """Overlapping m-bit pattern counts with wrap-around."""
    if m == 0:
        return np.array([len(bits)])
    return np.bincount(_window_values(bits, m, wrap=True), minlength=1 << m)


def frequency_monobit(bits: np.ndarray) -> Outcome:
    """Proportion of ones: p = erfc(|S_n| / sqrt(2n))."""
    n = len(bits)
    s_obs = abs(int(_pm_one(bits).sum())) / math.sqrt(n)
    return Outcome(s_obs, float(erfc(s_obs / math.sqrt(2.0))))


def block_frequency(bits: np.ndarray, block_len: int = BLOCK_FREQUENCY_BLOCK_LEN) -> Outcome:
    """Proportion of ones within M-bit blocks."""
    n_blocks = len(bits) // block_len
    if n_blocks == 0:
        raise ParameterError(f"block_frequency needs at least {block_len} bits")
    pi = bits[: n_blocks * block_len].reshape(n_blocks, block_len).mean(axis=1)
    chi2 = 4.0 * block_len * float(np.sum((pi - 0.5) ** 2))
    return Outcome(chi2, float(gammaincc(n_blocks / 2.0, chi2 / 2.0)))


def runs(bits: np.ndarray) -> Outcome:
    """
    Total number of runs.

    Fails outright (p = 0) when the proportion of ones is already too far
    from one half for the runs statistic to apply.
    """
    n = len(bits)
    pi = float(bits.mean())
    v_obs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return Outcome(float(v_obs), 0.0)
    p = erfc(abs(v_obs - 2.0 * n * pi * (1.0 - pi)) / (2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)))
    return Outcome(float(v_obs), float(p))


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones in each row."""
    n_rows, width = blocks.shape
    padded = np.zeros((n_rows, width + 2), dtype=np.int8)
    padded[:, 1:-1] = blocks
    edges = np.diff(padded.ravel())
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0]
    longest = np.zeros(n_rows, dtype=np.int64)
    np.maximum.at(longest, starts // (width + 2), ends - starts)
    return longest


def longest_run_of_ones(bits: np.ndarray) -> Outcome:
    """Longest run of ones per block against tabulated class probabilities."""
    n = len(bits)
    if n < 6272:
        block_len, bounds, probs = LONGEST_RUN_REGIMES[0]
    elif n < 750_000:
        block_len, bounds, probs = LONGEST_RUN_REGIMES[1]
    else:
        block_len, bounds, probs = LONGEST_RUN_REGIMES[2]
    n_blocks = n // block_len
    if n_blocks == 0:
        raise ParameterError(f"longest_run_of_ones needs at least {block_len} bits")

    longest = _longest_runs(bits[: n_blocks * block_len].reshape(n_blocks, block_len))
    classes = np.searchsorted(np.array(bounds), longest, side="left")
    observed = np.bincount(classes, minlength=len(probs))
    expected = n_blocks * np.array(probs)
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    k = len(probs) - 1
    return Outcome(chi2, float(gammaincc(k / 2.0, chi2 / 2.0)))


def _c_div(a: int, b: int) -> int:
    """Integer division truncating toward zero."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def cumulative_sums(bits: np.ndarray, mode: str = "forward") -> Outcome:
    """Maximal excursion of the +-1 random walk, forward or backward."""
    if mode not in ("forward", "backward"):
        raise ParameterError(f"mode must be 'forward' or 'backward', got {mode!r}")
    x = _pm_one(bits)
    if mode == "backward":
        x = x[::-1]
    n = len(x)
    z = int(np.abs(np.cumsum(x)).max())
    sqrt_n = math.sqrt(n)

    k1 = np.arange(_c_div(_c_div(-n, z) + 1, 4), _c_div(_c_div(n, z) - 1, 4) + 1)
    k2 = np.arange(_c_div(_c_div(-n, z) - 3, 4), _c_div(_c_div(n, z) - 1, 4) + 1)
    sum1 = np.sum(norm.cdf((4 * k1 + 1) * z / sqrt_n) - norm.cdf((4 * k1 - 1) * z / sqrt_n))
    sum2 = np.sum(norm.cdf((4 * k2 + 3) * z / sqrt_n) - norm.cdf((4 * k2 + 1) * z / sqrt_n))
    return Outcome(float(z), _clip_p(1.0 - sum1 + sum2))


def dft_spectral(bits: np.ndarray) -> Outcome:
    """Count of DFT peaks below the 95% threshold sqrt(ln(1/0.05) n)."""
    n = len(bits)
    moduli = np.abs(np.fft.rfft(_pm_one(bits).astype(float)))[: n // 2]
    threshold = math.sqrt(DFT_THRESHOLD_FACTOR * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(moduli < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return Outcome(d, float(erfc(abs(d) / math.sqrt(2.0))))


def _psi_squared(bits: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    n = len(bits)
    counts = _pattern_counts(bits, m).astype(float)
    return float((1 << m) / n * np.sum(counts**2) - n)


def serial(bits: np.ndarray, m: int = SERIAL_BLOCK_LEN) -> tuple[Outcome, Outcome]:
    """
    Frequency of all overlapping m-bit patterns.

    Returns:
        Outcomes for the first and second differences of psi-squared
    """
    if m < 2:
        raise ParameterError(f"serial needs m >= 2, got {m}")
    psi_m = _psi_squared(bits, m)
    psi_m1 = _psi_squared(bits, m - 1)
    psi_m2 = _psi_squared(bits, m - 2)
    del1 = psi_m - psi_m1
    del2 = psi_m - 2.0 * psi_m1 + psi_m2
    return (
        Outcome(del1, float(gammaincc(2.0 ** (m - 2), del1 / 2.0))),
        Outcome(del2, float(gammaincc(2.0 ** (m - 3), del2 / 2.0))),
    )


def _phi(bits: np.ndarray, m: int) -> float:
    counts = _pattern_counts(bits, m)
    freqs = counts[counts > 0] / len(bits)
    return float(np.sum(freqs * np.log(freqs)))


def approximate_entropy(bits: np.ndarray, m: int = APPROXIMATE_ENTROPY_BLOCK_LEN) -> Outcome:
    """Approximate entropy of overlapping m- and (m+1)-bit patterns."""
    if m < 1:
        raise ParameterError(f"approximate_entropy needs m >= 1, got {m}")
    n = len(bits)
    apen = _phi(bits, m) - _phi(bits, m + 1)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    return Outcome(chi2, float(gammaincc(2.0 ** (m - 1), chi2 / 2.0)))


def _rank_probabilities(size: int) -> tuple[float, float, float]:
    """P(rank = size), P(rank = size - 1) and the remainder for random square GF(2) matrices."""

    def p_rank(r: int) -> float:
        product = 1.0
        for i in range(r):
            product *= (1.0 - 2.0 ** (i - size)) ** 2 / (1.0 - 2.0 ** (i - r))
        return 2.0 ** (r * (2 * size - r) - size * size) * product

    full, minus_one = p_rank(size), p_rank(size - 1)
    return full, minus_one, 1.0 - full - minus_one


def gf2_ranks(rows: np.ndarray, width: int) -> np.ndarray:
    """
    Rank over GF(2) of a stack of matrices stored as row bitmasks.

    Args:
        rows: uint64 array (n_matrices, n_rows), bit `width - 1` is column 0
        width: Number of columns

    Returns:
        Rank of each matrix
    """
    rows = rows.copy()
    n_mat, n_rows = rows.shape
    rank = np.zeros(n_mat, dtype=np.int64)
    row_idx = np.arange(n_rows)
    mat_idx = np.arange(n_mat)

    for col in range(width - 1, -1, -1):
        has_bit = ((rows >> np.uint64(col)) & np.uint64(1)).astype(bool)
        candidates = has_bit & (row_idx[None, :] >= rank[:, None])
        found = candidates.any(axis=1) & (rank < n_rows)
        if not found.any():
            continue
        pivot = np.argmax(candidates, axis=1)
        m, p, r = mat_idx[found], pivot[found], rank[found]

        # Move the pivot row into position `rank`
        pivot_rows = rows[m, p].copy()
        rows[m, p] = rows[m, r]
        rows[m, r] = pivot_rows

        has_bit = ((rows >> np.uint64(col)) & np.uint64(1)).astype(bool)
        clear = has_bit & (row_idx[None, :] != rank[:, None]) & found[:, None]
        pivot_full = rows[mat_idx, np.minimum(rank, n_rows - 1)]
        rows = np.where(clear, rows ^ pivot_full[:, None], rows)
        rank = rank + found
    return rank


def binary_matrix_rank(bits: np.ndarray, size: int = RANK_MATRIX_SIZE) -> Outcome:
    """Rank distribution of disjoint size x size GF(2) matrices."""
    n_mat = len(bits) // (size * size)
    if n_mat == 0:
        raise ParameterError(f"binary_matrix_rank needs at least {size * size} bits")
    matrices = bits[: n_mat * size * size].reshape(n_mat, size, size).astype(np.uint64)
    weights = np.uint64(1) << np.arange(size - 1, -1, -1, dtype=np.uint64)
    rows = (matrices * weights).sum(axis=2, dtype=np.uint64)
    ranks = gf2_ranks(rows, size)

    observed = np.array(
        [np.count_nonzero(ranks == size), np.count_nonzero(ranks == size - 1), np.count_nonzero(ranks < size - 1)]
    )
    expected = n_mat * np.array(_rank_probabilities(size))
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    return Outcome(chi2, float(gammaincc(1.0, chi2 / 2.0)))


def aperiodic_templates(m: int = TEMPLATE_LEN) -> list[str]:
    """All m-bit templates with no proper prefix equal to a suffix."""
    templates = []
    for value in range(1 << m):
        word = format(value, f"0{m}b")
        if all(word[:k] != word[m - k :] for k in range(1, m)):
            templates.append(word)
    return templates


def _template_value(template: str) -> int:
    if not template or set(template) - {"0", "1"}:
        raise ParameterError(f"Template must be a non-empty 0/1 string, got {template!r}")
    return int(template, 2)


def _block_window_counts(bits: np.ndarray, m: int, n_blocks: int, block_len: int) -> np.ndarray:
    """Per-block histogram of m-bit window values, windows fully inside the block."""
    blocks = bits[: n_blocks * block_len].reshape(n_blocks, block_len)
    per_block = block_len - m + 1
    values = np.zeros((n_blocks, per_block), dtype=np.int64)
    for j in range(m):
        values = (values << 1) | blocks[:, j : j + per_block]
    flat = values + (np.arange(n_blocks)[:, None] << m)
    return np.bincount(flat.ravel(), minlength=n_blocks << m).reshape(n_blocks, 1 << m)


def non_overlapping_template(
    bits: np.ndarray,
    templates: Optional[list[str]] = None,
    n_blocks: int = NON_OVERLAPPING_BLOCKS,
) -> list[tuple[str, Outcome]]:
    """
    Occurrences of aperiodic templates in N blocks.

    Aperiodic templates cannot overlap themselves, so every window match is
    a non-overlapping occurrence.

    Returns:
        (template, outcome) per template
    """
    templates = templates if templates is not None else aperiodic_templates()
    m = len(templates[0])
    block_len = len(bits) // n_blocks
    if block_len < m:
        raise ParameterError("non_overlapping_template: blocks shorter than the template")
    counts = _block_window_counts(bits, m, n_blocks, block_len)

    mu = (block_len - m + 1) / 2.0**m
    var = block_len * (1.0 / 2.0**m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    results = []
    for template in templates:
        if len(template) != m:
            raise ParameterError("All templates must share one length")
        w = counts[:, _template_value(template)]
        chi2 = float(np.sum((w - mu) ** 2) / var)
        results.append((template, Outcome(chi2, float(gammaincc(n_blocks / 2.0, chi2 / 2.0)))))
    return results


def overlapping_template(
    bits: np.ndarray,
    m: int = TEMPLATE_LEN,
    block_len: int = OVERLAPPING_BLOCK_LEN,
) -> Outcome:
    """Overlapping occurrences of the all-ones template per block."""
    n_blocks = len(bits) // block_len
    if n_blocks == 0:
        raise ParameterError(f"overlapping_template needs at least {block_len} bits")
    counts = _block_window_counts(bits, m, n_blocks, block_len)[:, (1 << m) - 1]
    k = len(OVERLAPPING_CLASS_PROBS) - 1
    observed = np.bincount(np.minimum(counts, k), minlength=k + 1)
    expected = n_blocks * np.array(OVERLAPPING_CLASS_PROBS)
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    return Outcome(chi2, float(gammaincc(k / 2.0, chi2 / 2.0)))


def maurers_universal(bits: np.ndarray, block_len: Optional[int] = None) -> Outcome:
    """Compressibility via distances between repeated L-bit blocks."""
    n = len(bits)
    if block_len is None:
        eligible = [row for row in UNIVERSAL_TABLE if n >= row[0]]
        row = eligible[-1] if eligible else UNIVERSAL_TABLE[0]
    else:
        matches = [row for row in UNIVERSAL_TABLE if row[1] == block_len]
        if not matches:
            raise ParameterError(f"No universal-test constants for L = {block_len}")
        row = matches[0]
    _, L, expected_value, variance = row
    q = 10 * (1 << L)
    k = n // L - q
    if k <= 0:
        raise ParameterError(f"maurers_universal with L = {L} needs more than {(q + 1) * L} bits")

    blocks = bits[: (q + k) * L].reshape(q + k, L)
    values = blocks.astype(np.int64) @ (1 << np.arange(L - 1, -1, -1))
    positions = np.arange(1, q + k + 1)

    # Previous occurrence of each block value (0 when none)
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    previous_sorted = np.concatenate([[0], positions[order][:-1]])
    first = np.concatenate([[True], sorted_values[1:] != sorted_values[:-1]])
    previous_sorted[first] = 0
    previous = np.empty_like(previous_sorted)
    previous[order] = previous_sorted

    test = slice(q, q + k)
    fn = float(np.sum(np.log2(positions[test] - previous[test]))) / k
    c = 0.7 - 0.8 / L + (4.0 + 32.0 / L) * k ** (-3.0 / L) / 15.0
    sigma = c * math.sqrt(variance / k)
    return Outcome(fn, float(erfc(abs(fn - expected_value) / (math.sqrt(2.0) * sigma))))


def linear_complexities(blocks: np.ndarray) -> np.ndarray:
    """Berlekamp-Massey linear complexity of each row, vectorized across rows."""
    n_blocks, length = blocks.shape
    s = blocks.astype(np.uint8)
    c = np.zeros((n_blocks, length + 1), dtype=np.uint8)
    b = np.zeros((n_blocks, length + 1), dtype=np.uint8)
    c[:, 0] = b[:, 0] = 1
    lin = np.zeros(n_blocks, dtype=np.int64)
    last = np.full(n_blocks, -1, dtype=np.int64)
    columns = np.arange(length + 1)
    rows = np.arange(n_blocks)

    for n in range(length):
        # d = s_n + sum_{i=1..n} c_i s_{n-i}; c_i is zero beyond the current complexity
        window = s[:, n::-1]
        d = (np.einsum("ij,ij->i", c[:, : n + 1], window, dtype=np.int64) & 1).astype(bool)
        if not d.any():
            continue
        shift = n - last
        src = columns[None, :] - shift[:, None]
        shifted = np.where(src >= 0, b[rows[:, None], np.clip(src, 0, length)], 0).astype(np.uint8)
        t = c.copy()
        c = np.where(d[:, None], c ^ shifted, c)
        grow = d & (2 * lin <= n)
        lin = np.where(grow, n + 1 - lin, lin)
        last = np.where(grow, n, last)
        b = np.where(grow[:, None], t, b)
    return lin


def linear_complexity(bits: np.ndarray, block_len: int = LINEAR_COMPLEXITY_BLOCK_LEN) -> Outcome:
    """Linear complexity of M-bit blocks against its limiting distribution."""
    n_blocks = len(bits) // block_len
    if n_blocks == 0:
        raise ParameterError(f"linear_complexity needs at least {block_len} bits")
    lin = linear_complexities(bits[: n_blocks * block_len].reshape(n_blocks, block_len))

    M = block_len
    mu = M / 2.0 + (9.0 + (-1.0) ** (M + 1)) / 36.0 - (M / 3.0 + 2.0 / 9.0) / 2.0**M
    t = (-1.0) ** M * (lin - mu) + 2.0 / 9.0
    classes = np.digitize(t, [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5], right=True)
    k = len(LINEAR_COMPLEXITY_CLASS_PROBS) - 1
    observed = np.bincount(classes, minlength=k + 1)
    expected = n_blocks * np.array(LINEAR_COMPLEXITY_CLASS_PROBS)
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    return Outcome(chi2, float(gammaincc(k / 2.0, chi2 / 2.0)))


def _walk(bits: np.ndarray) -> tuple[np.ndarray, int]:
    """Random walk padded with zeros at both ends, and its cycle count."""
    walk = np.concatenate([[0], np.cumsum(_pm_one(bits)), [0]])
    cycles = int(np.count_nonzero(walk == 0)) - 1
    return walk, cycles


def excursion_cycles(bits: np.ndarray) -> int:
    """Number of zero-to-zero cycles of the +-1 random walk."""
    return _walk(bits)[1]


def _excursion_probs(x: int) -> np.ndarray:
    a = 1.0 / (2.0 * abs(x))
    probs = [1.0 - a] + [a * a * (1.0 - a) ** (k - 1) for k in range(1, 5)] + [a * (1.0 - a) ** 4]
    return np.array(probs)


def random_excursions(bits: np.ndarray) -> list[tuple[int, Outcome]]:
    """
    Visits to states -4..4 per random-walk cycle.

    Returns:
        (state, outcome) per state
    """
    walk, cycles = _walk(bits)
    cycle_id = np.cumsum(walk == 0) - 1

    results = []
    for x in EXCURSION_STATES:
        visits = np.bincount(cycle_id[walk == x], minlength=cycles)[:cycles]
        observed = np.bincount(np.minimum(visits, 5), minlength=6)
        expected = cycles * _excursion_probs(x)
        chi2 = float(np.sum((observed - expected) ** 2 / expected))
        results.append((x, Outcome(chi2, float(gammaincc(2.5, chi2 / 2.0)))))
    return results


def random_excursions_variant(bits: np.ndarray) -> list[tuple[int, Outcome]]:
    """Total visits to states -9..9 across all cycles."""
    walk, cycles = _walk(bits)
    results = []
    for x in EXCURSION_VARIANT_STATES:
        xi = int(np.count_nonzero(walk == x))
        p = erfc(abs(xi - cycles) / math.sqrt(2.0 * cycles * (4.0 * abs(x) - 2.0)))
        results.append((x, Outcome(float(xi), float(p))))
    return results


def _serial_m(n: int) -> int:
    return max(2, min(SERIAL_BLOCK_LEN, int(math.floor(math.log2(n))) - 3))


def _apen_m(n: int) -> int:
    return max(1, min(APPROXIMATE_ENTROPY_BLOCK_LEN, int(math.floor(math.log2(n))) - 6))


def _evaluate(name: str, bits: np.ndarray) -> list[tuple[str, Outcome]]:
    """Run one named test, returning (variant, outcome) pairs."""
    n = len(bits)
    if name == "frequency_monobit":
        return [("", frequency_monobit(bits))]
    if name == "block_frequency":
        return [("", block_frequency(bits))]
    if name == "runs":
        return [("", runs(bits))]
    if name == "longest_run_of_ones":
        return [("", longest_run_of_ones(bits))]
    if name == "cumulative_sums":
        return [(mode, cumulative_sums(bits, mode)) for mode in ("forward", "backward")]
    if name == "dft_spectral":
        return [("", dft_spectral(bits))]
    if name == "serial":
        first, second = serial(bits, _serial_m(n))
        return [("1", first), ("2", second)]
    if name == "approximate_entropy":
        return [("", approximate_entropy(bits, _apen_m(n)))]
    if name == "binary_matrix_rank":
        return [("", binary_matrix_rank(bits))]
    if name == "non_overlapping_template":
        return non_overlapping_template(bits)
    if name == "overlapping_template":
        return [("", overlapping_template(bits))]
    if name == "maurers_universal":
        return [("", maurers_universal(bits))]
    if name == "linear_complexity":
        return [("", linear_complexity(bits))]
    if name == "random_excursions":
        return [(f"{x:+d}", outcome) for x, outcome in random_excursions(bits)]
    if name == "random_excursions_variant":
        return [(f"{x:+d}", outcome) for x, outcome in random_excursions_variant(bits)]
    raise ParameterError(f"Unknown test '{name}'")


def _skip_reason(name: str, bits: np.ndarray) -> Optional[str]:
    n = len(bits)
    if n < MIN_BITS[name]:
        return f"needs {MIN_BITS[name]} bits, got {n}"
    if name in ("random_excursions", "random_excursions_variant"):
        cycles = excursion_cycles(bits)
        if cycles < MIN_EXCURSION_CYCLES:
            return f"needs {MIN_EXCURSION_CYCLES} cycles, got {cycles}"
    return None


def run_suite(
    bits: np.ndarray,
    alpha: float = SIGNIFICANCE_ALPHA,
    suite: str = "core",
    n_jobs: int = 1,
    verbose: bool = False,
) -> TestReport:
    """
    Run the test battery on a bit sequence.

    Tests whose minimum length (or cycle count) is not met are reported as
    skipped with no p-value.

    Args:
        bits: 0/1 sequence
        alpha: Significance level; a test passes when p >= alpha
        suite: 'core' (8 tests) or 'full' (15 tests)
        n_jobs: joblib workers for independent tests
        verbose: Print each verdict as it is collected

    Returns:
        TestReport

    Raises:
        BitInputError: Values other than 0 and 1
    """
    if suite not in SUITES:
        raise ParameterError(f"Unknown suite '{suite}', expected one of {sorted(SUITES)}")
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    bits = validate_bits(bits)

    names = SUITES[suite]
    skips = {name: _skip_reason(name, bits) for name in names}
    runnable = [name for name in names if skips[name] is None]
    if n_jobs == 1:
        outcomes = [_evaluate(name, bits) for name in runnable]
    else:
        outcomes = Parallel(n_jobs=n_jobs)(delayed(_evaluate)(name, bits) for name in runnable)
    by_name = dict(zip(runnable, outcomes))

    report = TestReport(alpha=alpha, n_bits=len(bits), suite=suite)
    for name in names:
        reason = skips[name]
        if reason is not None:
            report.records.append(TestRecord(name, None, None, None, note=reason))
            if verbose:
                print(f"  ⚠ {name}: skipped ({reason})")
            continue
        for variant, outcome in by_name[name]:
            p = _clip_p(outcome.p_value)
            record = TestRecord(name, float(outcome.statistic), p, p >= alpha, variant=variant)
            report.records.append(record)
            if verbose:
                print(f"  {record.label:<34} p = {p:.6f}  {record.status}")
    return report
