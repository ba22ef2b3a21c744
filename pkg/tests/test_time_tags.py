"""Tests for the QTAG time-tag file format and atomic outputs."""

import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.artifacts import atomic_write_text, sha256_file
from src.config import TAG_HEADER_SIZE, TAG_RECORD_SIZE
from src.exceptions import TagParseError
from src.photon_sim import Channel, ExperimentConfig, TagStream, TimeTagEvent, simulate
from src.time_tags import encode_tags, iter_tag_chunks, read_tags, write_tags


def _stream(events):
    return TagStream.from_events([TimeTagEvent(Channel(c), t) for c, t in events])


def _record(channel, timestamp):
    return struct.pack("<BQ", channel, timestamp)


def _header(count, magic=b"QTAG", version=1):
    return struct.pack("<4sH2sQ", magic, version, b"\x00\x00", count)


def test_layout_of_encoded_file():
    data = encode_tags(_stream([(0, 5), (2, 7)]))
    assert len(data) == TAG_HEADER_SIZE + 2 * TAG_RECORD_SIZE
    assert data[:4] == b"QTAG"
    assert data[TAG_HEADER_SIZE:] == _record(0, 5) + _record(2, 7)


def test_simulated_stream_survives_file(tmp_path):
    stream = simulate(ExperimentConfig(duration_s=0.02, seed=11))
    path = tmp_path / "run.qtag"
    write_tags(stream, path)
    loaded = read_tags(path)
    assert loaded.same_events(stream)


def test_empty_file_reads_empty_stream(tmp_path):
    path = tmp_path / "empty.qtag"
    write_tags(_stream([]), path)
    assert len(read_tags(path)) == 0
    assert list(iter_tag_chunks(path)) == []


def test_chunked_reading_preserves_records(tmp_path):
    events = [(i % 3, 10 * i) for i in range(25)]
    path = tmp_path / "chunks.qtag"
    write_tags(_stream(events), path)
    chunks = list(iter_tag_chunks(path, chunk_records=7))
    assert [len(c) for c in chunks] == [7, 7, 7, 4]
    assert_array_equal(np.concatenate([c.timestamps for c in chunks]), [t for _, t in events])


@pytest.mark.parametrize(
    "data, offset",
    [
        (b"QTA", 0),
        (_header(1, magic=b"XTAG") + _record(0, 1), 0),
        (_header(1, version=9) + _record(0, 1), 4),
        (_header(2) + _record(0, 1) + _record(1, 2)[:5], TAG_HEADER_SIZE + TAG_RECORD_SIZE),
        (_header(3) + _record(0, 1) + _record(1, 2), TAG_HEADER_SIZE + 2 * TAG_RECORD_SIZE),
        (_header(1) + _record(0, 1) + _record(1, 2), TAG_HEADER_SIZE + TAG_RECORD_SIZE),
        (_header(2) + _record(0, 1) + _record(7, 2), TAG_HEADER_SIZE + TAG_RECORD_SIZE),
        (_header(3) + _record(0, 1) + _record(1, 9) + _record(2, 4), TAG_HEADER_SIZE + 2 * TAG_RECORD_SIZE),
    ],
    ids=["short-header", "magic", "version", "partial-record", "missing-records", "trailing", "channel", "order"],
)
def test_malformed_files_report_offset(tmp_path, data, offset):
    path = tmp_path / "bad.qtag"
    path.write_bytes(data)
    with pytest.raises(TagParseError) as excinfo:
        read_tags(path)
    assert excinfo.value.offset == offset
    assert f"offset {offset}" in str(excinfo.value)


def test_ordering_checked_across_chunk_boundary(tmp_path):
    path = tmp_path / "boundary.qtag"
    path.write_bytes(_header(4) + _record(0, 1) + _record(0, 5) + _record(1, 3) + _record(2, 8))
    with pytest.raises(TagParseError) as excinfo:
        list(iter_tag_chunks(path, chunk_records=2))
    assert excinfo.value.offset == TAG_HEADER_SIZE + 2 * TAG_RECORD_SIZE


def test_chunks_before_a_bad_record_are_delivered(tmp_path):
    path = tmp_path / "late.qtag"
    path.write_bytes(_header(3) + _record(0, 1) + _record(1, 2) + _record(5, 3))
    chunks = iter_tag_chunks(path, chunk_records=2)
    assert len(next(chunks)) == 2
    with pytest.raises(TagParseError):
        next(chunks)


def test_equal_timestamps_are_accepted(tmp_path):
    path = tmp_path / "ties.qtag"
    write_tags(_stream([(0, 100), (1, 100), (2, 100)]), path)
    assert len(read_tags(path)) == 3


def test_atomic_write_leaves_no_temporary_files(tmp_path):
    path = tmp_path / "nested" / "out.txt"
    atomic_write_text(path, "first")
    atomic_write_text(path, "second")
    assert path.read_text() == "second"
    assert [p.name for p in path.parent.iterdir()] == ["out.txt"]


def test_sha256_of_known_content(tmp_path):
    path = tmp_path / "abc.txt"
    path.write_bytes(b"abc")
    assert sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
