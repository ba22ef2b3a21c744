"""Tests for heralded coincidence extraction."""

from bisect import bisect_left, bisect_right

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from src.coincidence import (
    AmbiguityPolicy,
    BitString,
    CoincidenceExtractor,
    CoincidenceParams,
    accidental_rate,
    extract_bits,
    extract_file,
)
from src.exceptions import OrderingError, ParameterError
from src.photon_sim import Channel, ExperimentConfig, TagStream, simulate
from src.time_tags import write_tags

A, B0, B1 = int(Channel.A), int(Channel.B0), int(Channel.B1)
DISCARD = CoincidenceParams(window_ps=10, policy=AmbiguityPolicy.DISCARD_AMBIGUOUS)
FIRST = CoincidenceParams(window_ps=10, policy=AmbiguityPolicy.FIRST_MATCH)


def _stream(events, duration_s=None):
    events = sorted(events, key=lambda e: (e[1], e[0]))
    channels = np.array([c for c, _ in events], dtype=np.uint8)
    times = np.array([t for _, t in events], dtype=np.uint64)
    return TagStream(channels, times, duration_s)


def brute_force_bits(channels, times, window, policy):
    """Reference matcher: every herald scans every event within its window, in stream order."""
    channels = [int(c) for c in channels]
    times = [int(t) for t in times]
    used = [False] * len(times)
    herald_times, bits = [], []
    ambiguous = 0
    for i in range(len(times)):
        if channels[i] != A:
            continue
        lo = bisect_left(times, times[i] - window)
        hi = bisect_right(times, times[i] + window)
        nearest = {}
        for channel in (B0, B1):
            best = None
            for j in range(lo, hi):
                if channels[j] != channel or used[j]:
                    continue
                delta = abs(times[j] - times[i])
                if delta <= window and (best is None or delta < best[1]):
                    best = (j, delta)
            nearest[channel] = best
        c0, c1 = nearest[B0], nearest[B1]
        if c0 is None and c1 is None:
            continue
        if c0 is not None and c1 is not None:
            if policy == AmbiguityPolicy.FIRST_MATCH and c0[1] != c1[1]:
                if c0[1] < c1[1]:
                    c1 = None
                else:
                    c0 = None
            else:
                used[i] = used[c0[0]] = used[c1[0]] = True
                ambiguous += 1
                continue
        partner, bit = (c0, 0) if c0 is not None else (c1, 1)
        used[i] = used[partner[0]] = True
        herald_times.append(times[i])
        bits.append(bit)
    return herald_times, bits, ambiguous


def test_isolated_pairs_give_bits():
    bits = extract_bits(_stream([(A, 0), (B0, 3), (A, 1000), (B1, 1004), (B0, 2000), (A, 2005)]), DISCARD)
    assert_array_equal(bits.bits, [0, 1, 0])
    assert_array_equal(bits.herald_times_ps, [0, 1000, 2005])
    assert bits.n_coincidences_0 == 2
    assert bits.n_coincidences_1 == 1
    assert bits.n_unmatched_events == 0


def test_window_is_inclusive():
    assert len(extract_bits(_stream([(A, 0), (B1, 10)]), DISCARD)) == 1
    assert len(extract_bits(_stream([(A, 0), (B1, 11)]), DISCARD)) == 0


def test_simultaneous_events_coincide():
    bits = extract_bits(_stream([(B1, 50), (A, 50)]), DISCARD)
    assert_array_equal(bits.bits, [1])


def test_herald_claims_nearest_candidate():
    bits = extract_bits(_stream([(A, 0), (B0, 4), (B0, 8)]), DISCARD)
    assert_array_equal(bits.bits, [0])
    assert bits.n_unmatched_events == 1


def test_equal_distance_candidates_prefer_earlier_event():
    extractor = CoincidenceExtractor(DISCARD)
    extractor.feed(np.array([B0, A, B0, A], dtype=np.uint8), np.array([0, 5, 10, 12]))
    bits = extractor.finish()
    # First herald takes B0@0; the second herald still finds B0@10
    assert_array_equal(bits.bits, [0, 0])


def test_earlier_herald_wins_contested_event():
    bits = extract_bits(_stream([(A, 0), (A, 6), (B0, 8)]), DISCARD)
    assert_array_equal(bits.herald_times_ps, [0])
    assert bits.n_unmatched_events == 1


def test_ambiguous_herald_discarded_with_both_candidates():
    bits = extract_bits(_stream([(A, 0), (B0, 5), (B1, 8)]), DISCARD)
    assert len(bits) == 0
    assert bits.n_ambiguous_discarded == 1
    assert bits.n_unmatched_events == 3


def test_first_match_keeps_nearer_candidate():
    bits = extract_bits(_stream([(A, 0), (B0, 5), (B1, 8)]), FIRST)
    assert_array_equal(bits.bits, [0])
    assert bits.n_ambiguous_discarded == 0
    assert bits.n_unmatched_events == 1


def test_first_match_discards_exact_tie():
    bits = extract_bits(_stream([(B0, 5), (A, 10), (B1, 15)]), FIRST)
    assert len(bits) == 0
    assert bits.n_ambiguous_discarded == 1


@pytest.mark.parametrize(
    "policy, events, narrow, wide, n_narrow",
    [
        (AmbiguityPolicy.DISCARD_AMBIGUOUS, [(A, 0), (B0, 5), (B1, 15), (A, 25)], 10, 15, 2),
        (AmbiguityPolicy.FIRST_MATCH, [(B0, 0), (A, 10), (B1, 20), (A, 25)], 9, 10, 1),
    ],
)
def test_wider_window_can_lose_bits(policy, events, narrow, wide, n_narrow):
    # The wider window makes the first herald ambiguous and it consumes the B1 event
    stream = _stream(events)
    assert len(extract_bits(stream, CoincidenceParams(window_ps=narrow, policy=policy))) == n_narrow
    assert len(extract_bits(stream, CoincidenceParams(window_ps=wide, policy=policy))) == 0


def test_empty_stream_gives_empty_bits():
    bits = extract_bits(_stream([]))
    assert len(bits) == 0
    assert bits.duration_s == 0.0
    assert bits.bit_rate_hz == 0.0


def test_unsorted_stream_raises_with_index():
    stream = TagStream(np.array([A, B0, A], dtype=np.uint8), np.array([0, 20, 10], dtype=np.uint64))
    with pytest.raises(OrderingError) as excinfo:
        extract_bits(stream)
    assert excinfo.value.index == 2


def test_ordering_checked_across_feeds():
    extractor = CoincidenceExtractor(DISCARD)
    extractor.feed(np.array([A, B0]), np.array([0, 100]))
    with pytest.raises(OrderingError) as excinfo:
        extractor.feed(np.array([A]), np.array([50]))
    assert excinfo.value.index == 2


def test_non_positive_window_rejected():
    with pytest.raises(ParameterError):
        CoincidenceParams(window_ps=0)


def test_policy_accepts_plain_string():
    assert CoincidenceParams(policy="first_match").policy is AmbiguityPolicy.FIRST_MATCH


event_lists = st.lists(
    st.tuples(st.sampled_from([A, B0, B1]), st.integers(min_value=0, max_value=400)), max_size=40
)


@settings(max_examples=200, deadline=None)
@given(
    events=event_lists,
    window=st.integers(min_value=1, max_value=60),
    policy=st.sampled_from(list(AmbiguityPolicy)),
)
def test_matches_brute_force(events, window, policy):
    stream = _stream(events)
    bits = extract_bits(stream, CoincidenceParams(window_ps=window, policy=policy))
    herald_times, expected, ambiguous = brute_force_bits(stream.channels, stream.timestamps, window, policy)
    assert bits.bits.tolist() == expected
    assert bits.herald_times_ps.tolist() == herald_times
    assert bits.n_ambiguous_discarded == ambiguous
    assert bits.n_unmatched_events == len(stream) - 2 * len(bits)


def crowded_stream(seed, n_events=10_000):
    """Random channels with a mean spacing of 20 ps, so windows overlap and segments run long."""
    rng = np.random.default_rng(seed)
    channels = rng.choice(np.array([A, B0, B1], dtype=np.uint8), n_events)
    times = rng.integers(0, 20 * n_events, n_events).astype(np.uint64)
    order = np.lexsort((channels, times))
    return TagStream(channels[order], times[order])


@pytest.mark.slow
@pytest.mark.parametrize("policy", list(AmbiguityPolicy))
def test_crowded_streams_match_brute_force(policy):
    for seed in range(200):
        stream = crowded_stream(seed)
        window = 5 + seed % 56
        bits = extract_bits(stream, CoincidenceParams(window_ps=window, policy=policy))
        herald_times, expected, ambiguous = brute_force_bits(stream.channels, stream.timestamps, window, policy)
        assert bits.bits.tolist() == expected, f"seed {seed}"
        assert bits.herald_times_ps.tolist() == herald_times
        assert bits.n_ambiguous_discarded == ambiguous
        assert bits.n_unmatched_events == len(stream) - 2 * len(bits)


@settings(max_examples=100, deadline=None)
@given(events=event_lists, chunk=st.integers(min_value=1, max_value=7), window=st.integers(min_value=1, max_value=60))
def test_chunked_feeding_matches_single_feed(events, chunk, window):
    stream = _stream(events)
    params = CoincidenceParams(window_ps=window)
    whole = extract_bits(stream, params)

    extractor = CoincidenceExtractor(params)
    for start in range(0, len(stream), chunk):
        extractor.feed(stream.channels[start:start + chunk], stream.timestamps[start:start + chunk])
    pieces = extractor.finish(stream.duration_s)

    assert_array_equal(pieces.bits, whole.bits)
    assert pieces.n_ambiguous_discarded == whole.n_ambiguous_discarded
    assert pieces.n_unmatched_events == whole.n_unmatched_events


def test_file_extraction_matches_in_memory(tmp_path):
    stream = simulate(ExperimentConfig(duration_s=0.05, seed=21))
    path = tmp_path / "run.qtag"
    write_tags(stream, path)
    in_memory = extract_bits(stream)
    from_file = extract_file(path, chunk_records=997, duration_s=0.05)
    assert_array_equal(from_file.bits, in_memory.bits)
    assert from_file.n_unmatched_events == in_memory.n_unmatched_events
    assert from_file.bit_rate_hz == pytest.approx(in_memory.bit_rate_hz)


def test_duration_defaults_to_tag_span(tmp_path):
    path = tmp_path / "span.qtag"
    write_tags(_stream([(A, 0), (B0, 5), (A, 2_000_000), (B1, 2_000_003)]), path)
    bits = extract_file(path)
    assert bits.duration_s == pytest.approx(2_000_003e-12)


def test_simulated_bench_rate():
    config = ExperimentConfig(seed=13)
    stream = simulate(config)
    bits = extract_bits(stream)
    expected = config.expected_coincidence_hz()
    singles_A, singles_B0, singles_B1 = config.expected_singles_hz()
    accidentals = accidental_rate(singles_A, singles_B0 + singles_B1, 25_000)
    assert 0.98 * expected <= bits.bit_rate_hz <= expected + accidentals + 5 * np.sqrt(expected)
    assert bits.n_unmatched_events == len(stream) - 2 * len(bits)


@pytest.mark.parametrize("pair_rate_hz", [5e4, 1.6e5, 5e5])
def test_bit_rate_follows_pair_rate(pair_rate_hz):
    config = ExperimentConfig(pair_rate_hz=pair_rate_hz, duration_s=2e6 / pair_rate_hz, seed=19)
    bits = extract_bits(simulate(config))
    assert bits.bit_rate_hz == pytest.approx(config.expected_coincidence_hz(), rel=0.05)


def test_uncorrelated_streams_give_accidental_rate():
    config = ExperimentConfig(pair_rate_hz=0.0, dark_rate_hz=(1e5, 1e5, 0.0), seed=17)
    bits = extract_bits(simulate(config))
    assert bits.bit_rate_hz == pytest.approx(accidental_rate(1e5, 1e5, 25_000), rel=0.15)


def test_accidental_rate_formula():
    assert accidental_rate(1e6, 5e4, 25_000) == pytest.approx(2500.0)
    with pytest.raises(ParameterError):
        accidental_rate(-1.0, 1.0, 10)


def test_bit_string_helpers():
    bits = BitString.from_bits(np.array([0, 1, 1, 0, 1]), duration_s=0.5)
    assert bits.n_coincidences_0 == 2
    assert bits.n_coincidences_1 == 3
    assert bits.bit_rate_hz == pytest.approx(10.0)
    assert bits.as_text() == "01101"
