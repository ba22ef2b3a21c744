"""Synthetic time-tagged detection streams from a modelled QRNG bench.

Pairs are emitted by a homogeneous Poisson process. Photon A heralds through a
multi-mode fibre; photon B takes path B0 or B1 according to the system bias,
survives its grating's first order, optionally its OAM projection, and finally
its detector. Both photons of a pair share one emission time; detector jitter
and dark counts are added on top.
"""

import hashlib
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .config import (
    DEFAULT_DARK_RATE_HZ,
    DEFAULT_EFFICIENCY_A,
    DEFAULT_EFFICIENCY_B,
    DEFAULT_JITTER_PS,
    DEFAULT_PAIR_RATE_HZ,
    MAX_DURATION_S,
)
from .exceptions import ParameterError, TimeRangeError
from .hologram import SplitterConfig
from .spdc_model import SpiralSpectrum, joint_projection_probability, marginal_projection_weight


class Channel(IntEnum):
    """Detector channel, ordered A < B0 < B1 for timestamp ties."""

    A = 0
    B0 = 1
    B1 = 2


class TimeTagEvent(NamedTuple):
    """One detection record."""

    channel: Channel
    timestamp_ps: int


@dataclass(eq=False)
class TagStream:
    """
    Time-tag stream held as parallel arrays.

    Attributes:
        channels: uint8 channel codes (0 = A, 1 = B0, 2 = B1)
        timestamps: uint64 picoseconds from run start
        duration_s: Acquisition time, when known
    """

    channels: np.ndarray
    timestamps: np.ndarray
    duration_s: Optional[float] = None

    def __post_init__(self):
        self.channels = np.ascontiguousarray(self.channels, dtype=np.uint8)
        self.timestamps = np.ascontiguousarray(self.timestamps, dtype=np.uint64)
        if self.channels.shape != self.timestamps.shape:
            raise ParameterError("channels and timestamps must have the same length")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self) -> Iterator[TimeTagEvent]:
        for ch, ts in zip(self.channels.tolist(), self.timestamps.tolist()):
            yield TimeTagEvent(Channel(ch), ts)

    @classmethod
    def from_events(cls, events: list[TimeTagEvent], duration_s: Optional[float] = None) -> "TagStream":
        """Build a stream from individual records (kept in the given order)."""
        channels = np.array([int(e.channel) for e in events], dtype=np.uint8)
        timestamps = np.array([int(e.timestamp_ps) for e in events], dtype=np.uint64)
        return cls(channels, timestamps, duration_s)

    def events(self) -> list[TimeTagEvent]:
        """All records as TimeTagEvent tuples."""
        return list(self)

    def count(self, channel: Channel) -> int:
        """Number of events on one channel."""
        return int(np.count_nonzero(self.channels == channel))

    def span_s(self) -> float:
        """Duration if known, otherwise the first-to-last timestamp span."""
        if self.duration_s is not None:
            return self.duration_s
        if len(self) < 2:
            return 0.0
        return float(self.timestamps[-1] - self.timestamps[0]) * 1e-12

    def same_events(self, other: "TagStream") -> bool:
        """True when both streams hold identical records in identical order."""
        return bool(
            np.array_equal(self.channels, other.channels) and np.array_equal(self.timestamps, other.timestamps)
        )

    def digest(self) -> str:
        """SHA-256 of the record arrays, for determinism checks."""
        h = hashlib.sha256()
        h.update(self.channels.tobytes())
        h.update(self.timestamps.astype("<u8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class ProjectionSetting:
    """
    OAM projections displayed on the B-arm holograms.

    Attributes:
        spectrum: Spiral spectrum of the source
        l_B0: Mode projected in arm B0 (None blocks the arm)
        l_B1: Mode projected in arm B1 (None blocks the arm)
        l_A: Mode projected on the herald; None for multi-mode heralding
        crosstalk: Off-diagonal crosstalk fraction
    """

    spectrum: SpiralSpectrum
    l_B0: Optional[int]
    l_B1: Optional[int]
    l_A: Optional[int] = None
    crosstalk: float = 0.0

    def __post_init__(self):
        for l in (self.l_B0, self.l_B1, self.l_A):
            if l is not None:
                self.spectrum.check_index(l)
        if not 0.0 <= self.crosstalk < 1.0:
            raise ParameterError(f"crosstalk must lie in [0, 1), got {self.crosstalk}")

    def arm_weights(self) -> tuple[float, float]:
        """Projection weight applied to each arm's routing probability."""
        weights = []
        for l_B in (self.l_B0, self.l_B1):
            if l_B is None:
                weights.append(0.0)
            elif self.l_A is None:
                weights.append(marginal_projection_weight(self.spectrum, l_B, self.crosstalk))
            else:
                weights.append(joint_projection_probability(self.spectrum, self.l_A, l_B, self.crosstalk))
        return weights[0], weights[1]


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """
    Parameters of one simulated acquisition.

    Attributes:
        pair_rate_hz: Mean SPDC pair generation rate
        duration_s: Acquisition time
        efficiency_A: Heralding efficiency of arm A
        efficiency_B0: Detection efficiency of arm B0
        efficiency_B1: Detection efficiency of arm B1
        dark_rate_hz: Dark-count rate per channel (A, B0, B1)
        jitter_ps: Gaussian timing spread (1 sigma) per detection
        splitter: Bias and grating depths of the SLM splitter
        projection: Optional OAM projections on the B arms
        seed: Generator seed; identical configs reproduce identical streams
        dead_time_ps: Detector dead time per channel
    """

    pair_rate_hz: float = DEFAULT_PAIR_RATE_HZ
    duration_s: float = 1.0
    efficiency_A: float = DEFAULT_EFFICIENCY_A
    efficiency_B0: float = DEFAULT_EFFICIENCY_B
    efficiency_B1: float = DEFAULT_EFFICIENCY_B
    dark_rate_hz: tuple[float, float, float] = (DEFAULT_DARK_RATE_HZ,) * 3
    jitter_ps: float = DEFAULT_JITTER_PS
    splitter: SplitterConfig = field(default_factory=SplitterConfig)
    projection: Optional[ProjectionSetting] = None
    seed: int = 0
    dead_time_ps: float = 0.0

    def __post_init__(self):
        if isinstance(self.dark_rate_hz, (int, float)):
            object.__setattr__(self, "dark_rate_hz", (float(self.dark_rate_hz),) * 3)
        if len(self.dark_rate_hz) != 3:
            raise ParameterError("dark_rate_hz needs one rate per channel (A, B0, B1)")

        if self.pair_rate_hz < 0:
            raise ParameterError(f"pair_rate_hz must be non-negative, got {self.pair_rate_hz}")
        if not self.duration_s > 0:
            raise ParameterError(f"duration_s must be positive, got {self.duration_s}")
        if self.duration_s > MAX_DURATION_S:
            raise TimeRangeError(
                f"duration_s={self.duration_s} overflows the picosecond clock (max {MAX_DURATION_S:.3e} s)"
            )
        for name in ("efficiency_A", "efficiency_B0", "efficiency_B1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {value}")
        if any(rate < 0 for rate in self.dark_rate_hz):
            raise ParameterError(f"dark rates must be non-negative, got {self.dark_rate_hz}")
        if self.jitter_ps < 0:
            raise ParameterError(f"jitter_ps must be non-negative, got {self.jitter_ps}")
        if self.dead_time_ps < 0:
            raise ParameterError(f"dead_time_ps must be non-negative, got {self.dead_time_ps}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def arm_factors(self) -> tuple[float, float]:
        """
        Probability that photon B of a pair is detected in each arm.

        Product of path choice, first-order grating efficiency, projection
        weight and detector efficiency.
        """
        path0, path1 = self.splitter.path_probabilities()
        s0, s1 = self.splitter.grating_efficiencies()
        w0, w1 = self.projection.arm_weights() if self.projection is not None else (1.0, 1.0)
        return path0 * s0 * w0 * self.efficiency_B0, path1 * s1 * w1 * self.efficiency_B1

    def expected_singles_hz(self) -> tuple[float, float, float]:
        """Analytic singles rate per channel, including dark counts."""
        f0, f1 = self.arm_factors()
        rate = self.pair_rate_hz
        return (
            rate * self.efficiency_A + self.dark_rate_hz[0],
            rate * f0 + self.dark_rate_hz[1],
            rate * f1 + self.dark_rate_hz[2],
        )

    def expected_coincidence_hz(self) -> float:
        """Analytic true-coincidence (bit) rate, pair_rate * eta_A * (f0 + f1)."""
        f0, f1 = self.arm_factors()
        return self.pair_rate_hz * self.efficiency_A * (f0 + f1)

    def expected_bit_probabilities(self) -> tuple[float, float]:
        """Probability that a true coincidence yields 0 or 1."""
        f0, f1 = self.arm_factors()
        if f0 + f1 <= 0:
            raise ParameterError("No B photon can be detected with this configuration")
        return f0 / (f0 + f1), f1 / (f0 + f1)


def _apply_dead_time(timestamps: np.ndarray, dead_time_ps: float) -> np.ndarray:
    """Mask of events kept by a non-paralyzable detector (input sorted)."""
    keep = np.ones(len(timestamps), dtype=bool)
    last = None
    for i, t in enumerate(timestamps.tolist()):
        if last is not None and t - last < dead_time_ps:
            keep[i] = False
        else:
            last = t
    return keep


def simulate(config: ExperimentConfig, verbose: bool = False) -> TagStream:
    """
    Generate a sorted time-tag stream for one acquisition.

    Draw order is fixed (pair count, pair times, herald, path, grating,
    detection, jitter, dark counts per channel) so a seed fully determines
    the stream.

    Args:
        config: Experiment parameters
        verbose: Print a short summary of the generated stream

    Returns:
        TagStream sorted by timestamp, ties broken by channel A < B0 < B1
    """
    rng = np.random.default_rng(config.seed)
    end_ps = int(round(config.duration_s * 1e12))

    n_pairs = int(rng.poisson(config.pair_rate_hz * config.duration_s))
    pair_times = np.sort(rng.integers(0, end_ps, size=n_pairs, endpoint=True, dtype=np.int64))

    herald = rng.random(n_pairs) < config.efficiency_A

    path0, _ = config.splitter.path_probabilities()
    s0, s1 = config.splitter.grating_efficiencies()
    w0, w1 = config.projection.arm_weights() if config.projection is not None else (1.0, 1.0)
    to_b1 = rng.random(n_pairs) >= path0
    survives = rng.random(n_pairs) < np.where(to_b1, s1 * w1, s0 * w0)
    detected = rng.random(n_pairs) < np.where(to_b1, config.efficiency_B1, config.efficiency_B0)
    b_hit = survives & detected

    if config.jitter_ps > 0:
        jitter_a = np.rint(rng.normal(0.0, config.jitter_ps, n_pairs)).astype(np.int64)
        jitter_b = np.rint(rng.normal(0.0, config.jitter_ps, n_pairs)).astype(np.int64)
    else:
        jitter_a = jitter_b = np.zeros(n_pairs, dtype=np.int64)

    times = [pair_times[herald] + jitter_a[herald], pair_times[b_hit] + jitter_b[b_hit]]
    channels = [
        np.full(int(herald.sum()), Channel.A, dtype=np.uint8),
        np.where(to_b1[b_hit], Channel.B1, Channel.B0).astype(np.uint8),
    ]

    for channel, dark_rate in zip(Channel, config.dark_rate_hz):
        n_dark = int(rng.poisson(dark_rate * config.duration_s))
        times.append(rng.integers(0, end_ps, size=n_dark, endpoint=True, dtype=np.int64))
        channels.append(np.full(n_dark, channel, dtype=np.uint8))

    all_times = np.clip(np.concatenate(times), 0, end_ps)
    all_channels = np.concatenate(channels)
    order = np.lexsort((all_channels, all_times))
    all_times = all_times[order]
    all_channels = all_channels[order]

    if config.dead_time_ps > 0:
        keep = np.ones(len(all_times), dtype=bool)
        for channel in Channel:
            idx = np.nonzero(all_channels == channel)[0]
            keep[idx] = _apply_dead_time(all_times[idx], config.dead_time_ps)
        all_times = all_times[keep]
        all_channels = all_channels[keep]

    stream = TagStream(all_channels, all_times.astype(np.uint64), config.duration_s)
    if verbose:
        print(
            f"Simulated {n_pairs} pairs over {config.duration_s:g}s: "
            f"A={stream.count(Channel.A)}, B0={stream.count(Channel.B0)}, B1={stream.count(Channel.B1)} events"
        )
    return stream


def derive_seed(root_seed: int, *index: int) -> int:
    """Independent 64-bit seed for one point of a multi-run scan."""
    return int(np.random.SeedSequence([root_seed, *index]).generate_state(1, np.uint64)[0])
