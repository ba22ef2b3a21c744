"""Heralded coincidence extraction and bit generation.

An A detection and a B detection form a coincidence when their timestamps
differ by at most the window (inclusive). A-B0 appends a 0, A-B1 appends a 1.
A events are taken in time order; each claims the nearest unused candidate
in each B channel (ties go to the earlier event) and every event joins at
most one coincidence. A herald with candidates in both B channels is
ambiguous: `discard_ambiguous` drops the herald and both candidates,
`first_match` keeps the nearer one and discards exact ties.

Events separated by a gap wider than the window can never interact, so the
stream is cut into independent segments at such gaps. Isolated A-B pairs are
resolved in bulk; only crowded segments go through the per-event rule.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .config import COINCIDENCE_WINDOW_PS
from .exceptions import OrderingError, ParameterError
from .photon_sim import Channel, TagStream
from .time_tags import iter_tag_chunks


class AmbiguityPolicy(str, Enum):
    """Resolution of a herald with candidates in both B channels."""

    DISCARD_AMBIGUOUS = "discard_ambiguous"
    FIRST_MATCH = "first_match"


@dataclass(frozen=True)
class CoincidenceParams:
    """
    Coincidence window and ambiguity policy.

    Attributes:
        window_ps: Maximum |t_A - t_B| for a coincidence (inclusive)
        policy: What to do when one herald matches both B channels
    """

    window_ps: int = COINCIDENCE_WINDOW_PS
    policy: AmbiguityPolicy = AmbiguityPolicy.DISCARD_AMBIGUOUS

    def __post_init__(self):
        if not self.window_ps > 0:
            raise ParameterError(f"window_ps must be positive, got {self.window_ps}")
        object.__setattr__(self, "policy", AmbiguityPolicy(self.policy))


@dataclass(eq=False)
class BitString:
    """
    Extracted random bits with generation metadata.

    Attributes:
        bits: uint8 array of 0/1 values, in herald time order
        n_coincidences_0: A-B0 coincidences
        n_coincidences_1: A-B1 coincidences
        n_ambiguous_discarded: Heralds dropped as ambiguous
        n_unmatched_events: Events in no coincidence (discarded ones included)
        duration_s: Acquisition time the bits were drawn from
    """

    bits: np.ndarray
    n_coincidences_0: int = 0
    n_coincidences_1: int = 0
    n_ambiguous_discarded: int = 0
    n_unmatched_events: int = 0
    duration_s: float = 0.0
    herald_times_ps: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=np.uint8)

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_bits(cls, bits: np.ndarray, duration_s: float = 0.0) -> "BitString":
        """Wrap a bare bit array, deriving the per-value counts."""
        bits = np.asarray(bits, dtype=np.uint8)
        n1 = int(bits.sum())
        return cls(bits, n_coincidences_0=len(bits) - n1, n_coincidences_1=n1, duration_s=duration_s)

    @property
    def bit_rate_hz(self) -> float:
        """Bits per second of acquisition (0 when the duration is unknown)."""
        if self.duration_s <= 0:
            return 0.0
        return len(self.bits) / self.duration_s

    def as_text(self) -> str:
        """Bits as a '0'/'1' string."""
        return (self.bits + ord("0")).tobytes().decode("ascii")


def accidental_rate(singles_A_hz: float, singles_B_hz: float, window_ps: float) -> float:
    """
    Expected rate of false coincidences between uncorrelated channels.

    Args:
        singles_A_hz: Singles rate of the herald
        singles_B_hz: Singles rate of one B channel
        window_ps: Coincidence window

    Returns:
        singles_A * singles_B * 2 * window (Hz)
    """
    if singles_A_hz < 0 or singles_B_hz < 0:
        raise ParameterError("singles rates must be non-negative")
    return singles_A_hz * singles_B_hz * 2.0 * window_ps * 1e-12


def _nearest_candidate(
    channels: list[int], timestamps: list[int], used: list[bool], herald: int, channel: int, window: int
) -> tuple[Optional[int], int]:
    best: Optional[int] = None
    best_delta = 0
    t_a = timestamps[herald]
    for j, (ch, t) in enumerate(zip(channels, timestamps)):
        if ch != channel or used[j]:
            continue
        delta = abs(t - t_a)
        if delta <= window and (best is None or delta < best_delta):
            best, best_delta = j, delta
    return best, best_delta


def _match_segment(
    channels: list[int], timestamps: list[int], window: int, policy: AmbiguityPolicy
) -> tuple[list[tuple[int, int]], int]:
    """
    Greedy matching inside one crowded segment.

    Returns:
        ((herald_time, bit) list in herald order, ambiguous herald count)
    """
    used = [False] * len(channels)
    found: list[tuple[int, int]] = []
    ambiguous = 0

    for i, ch in enumerate(channels):
        if ch != Channel.A:
            continue
        j0, d0 = _nearest_candidate(channels, timestamps, used, i, Channel.B0, window)
        j1, d1 = _nearest_candidate(channels, timestamps, used, i, Channel.B1, window)
        if j0 is None and j1 is None:
            continue

        if j0 is not None and j1 is not None:
            if policy is AmbiguityPolicy.FIRST_MATCH and d0 != d1:
                if d0 < d1:
                    j1 = None
                else:
                    j0 = None
            else:
                used[i] = used[j0] = used[j1] = True
                ambiguous += 1
                continue

        partner = j0 if j0 is not None else j1
        assert partner is not None
        used[i] = used[partner] = True
        found.append((timestamps[i], 0 if partner == j0 else 1))

    return found, ambiguous


class CoincidenceExtractor:
    """
    Single-pass, chunk-fed coincidence scanner.

    Only the trailing segment of each chunk (events that may still pair with
    the next chunk) is held back, so memory stays bounded by the events in
    one window-connected span.

    Usage:
        extractor = CoincidenceExtractor(CoincidenceParams())
        for chunk in iter_tag_chunks("run.qtag"):
            extractor.feed(chunk.channels, chunk.timestamps)
        bits = extractor.finish()
    """

    def __init__(self, params: CoincidenceParams):
        self.params = params
        self._carry_channels = np.empty(0, dtype=np.uint8)
        self._carry_times = np.empty(0, dtype=np.int64)
        self._n_events = 0
        self._first_time: Optional[int] = None
        self._last_time: Optional[int] = None
        self._herald_times: list[np.ndarray] = []
        self._bits: list[np.ndarray] = []
        self._ambiguous = 0

    def feed(self, channels: np.ndarray, timestamps: np.ndarray) -> None:
        """
        Consume the next chunk of a time-sorted stream.

        Raises:
            OrderingError: A timestamp is smaller than its predecessor
        """
        channels = np.asarray(channels, dtype=np.uint8)
        times = np.asarray(timestamps).astype(np.int64)
        if len(times) == 0:
            return

        if self._last_time is not None and times[0] < self._last_time:
            raise OrderingError("Stream not sorted by timestamp", self._n_events)
        backwards = np.nonzero(times[1:] < times[:-1])[0]
        if backwards.size:
            raise OrderingError("Stream not sorted by timestamp", self._n_events + int(backwards[0]) + 1)

        if self._first_time is None:
            self._first_time = int(times[0])
        self._last_time = int(times[-1])
        self._n_events += len(times)

        channels = np.concatenate([self._carry_channels, channels])
        times = np.concatenate([self._carry_times, times])
        starts = np.concatenate([[0], np.nonzero(np.diff(times) > self.params.window_ps)[0] + 1])

        # The last segment may continue into the next chunk
        tail = int(starts[-1])
        self._process(channels[:tail], times[:tail], starts[:-1])
        self._carry_channels = channels[tail:]
        self._carry_times = times[tail:]

    def finish(self, duration_s: Optional[float] = None) -> BitString:
        """
        Flush held-back events and build the bit string.

        Args:
            duration_s: Acquisition time; defaults to the first-to-last tag span

        Returns:
            BitString with counts and rate
        """
        if len(self._carry_times):
            self._process(self._carry_channels, self._carry_times, np.array([0]))
            self._carry_channels = np.empty(0, dtype=np.uint8)
            self._carry_times = np.empty(0, dtype=np.int64)

        if self._bits:
            herald_times = np.concatenate(self._herald_times)
            bits = np.concatenate(self._bits)
            order = np.argsort(herald_times, kind="stable")
            herald_times = herald_times[order]
            bits = bits[order]
        else:
            herald_times = np.empty(0, dtype=np.int64)
            bits = np.empty(0, dtype=np.uint8)

        if duration_s is None:
            if self._first_time is None or self._last_time is None:
                duration_s = 0.0
            else:
                duration_s = (self._last_time - self._first_time) * 1e-12

        n1 = int(bits.sum())
        n0 = len(bits) - n1
        return BitString(
            bits=bits,
            n_coincidences_0=n0,
            n_coincidences_1=n1,
            n_ambiguous_discarded=self._ambiguous,
            n_unmatched_events=self._n_events - 2 * len(bits),
            duration_s=duration_s,
            herald_times_ps=herald_times,
        )

    def _process(self, channels: np.ndarray, times: np.ndarray, starts: np.ndarray) -> None:
        """Resolve complete segments starting at `starts`."""
        if len(times) == 0:
            return
        lengths = np.diff(np.append(starts, len(times)))
        segment = np.repeat(np.arange(len(starts)), lengths)
        n_a = np.bincount(segment, weights=(channels == Channel.A), minlength=len(starts))
        n_b = lengths - n_a

        # Exactly one herald and one B event: a plain coincidence
        simple = (lengths == 2) & (n_a == 1)
        first = starts[simple]
        a_first = channels[first] == Channel.A
        a_idx = np.where(a_first, first, first + 1)
        b_idx = np.where(a_first, first + 1, first)
        self._herald_times.append(times[a_idx])
        self._bits.append((channels[b_idx] == Channel.B1).astype(np.uint8))

        crowded = np.nonzero((lengths > 2) & (n_a > 0) & (n_b > 0))[0]
        for k in crowded.tolist():
            lo = int(starts[k])
            hi = lo + int(lengths[k])
            found, ambiguous = _match_segment(
                channels[lo:hi].tolist(), times[lo:hi].tolist(), self.params.window_ps, self.params.policy
            )
            self._ambiguous += ambiguous
            if found:
                self._herald_times.append(np.array([t for t, _ in found], dtype=np.int64))
                self._bits.append(np.array([b for _, b in found], dtype=np.uint8))


def extract_bits(stream: TagStream, params: Optional[CoincidenceParams] = None) -> BitString:
    """
    Extract the random bit string from a sorted time-tag stream.

    Args:
        stream: Time-tag stream sorted by timestamp
        params: Window and ambiguity policy (defaults: 25 ns, discard_ambiguous)

    Returns:
        BitString; an empty stream gives an empty BitString

    Raises:
        OrderingError: Stream not sorted, with the first offending index
    """
    extractor = CoincidenceExtractor(params or CoincidenceParams())
    extractor.feed(stream.channels, stream.timestamps)
    return extractor.finish(stream.duration_s)


def extract_file(
    path: str | Path,
    params: Optional[CoincidenceParams] = None,
    chunk_records: int = 1 << 20,
    duration_s: Optional[float] = None,
    verbose: bool = False,
) -> BitString:
    """
    Extract bits from a QTAG file without loading it whole.

    Args:
        path: QTAG file
        params: Window and ambiguity policy
        chunk_records: Records read per chunk
        duration_s: Acquisition time, if known
        verbose: Print progress per chunk

    Returns:
        BitString
    """
    extractor = CoincidenceExtractor(params or CoincidenceParams())
    for i, chunk in enumerate(iter_tag_chunks(path, chunk_records)):
        extractor.feed(chunk.channels, chunk.timestamps)
        if verbose:
            print(f"  chunk {i + 1}: {len(chunk)} events")
    return extractor.finish(duration_s)
