"""QTAG binary time-tag files.

Layout, little-endian: a 16-byte header (magic "QTAG", version u16, two
reserved bytes, record count u64) followed by 9-byte records (channel u8,
timestamp u64 in picoseconds).
"""

import struct
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .artifacts import atomic_write_bytes
from .config import TAG_HEADER_SIZE, TAG_MAGIC, TAG_RECORD_SIZE, TAG_VERSION
from .exceptions import TagParseError
from .photon_sim import TagStream

HEADER_FORMAT = "<4sH2sQ"
RECORD_DTYPE = np.dtype([("channel", "u1"), ("timestamp", "<u8")])
MAX_CHANNEL = 2


def encode_tags(stream: TagStream) -> bytes:
    """Serialize a stream to QTAG bytes."""
    header = struct.pack(HEADER_FORMAT, TAG_MAGIC, TAG_VERSION, b"\x00\x00", len(stream))
    records = np.empty(len(stream), dtype=RECORD_DTYPE)
    records["channel"] = stream.channels
    records["timestamp"] = stream.timestamps
    return header + records.tobytes()


def write_tags(stream: TagStream, path: str | Path) -> None:
    """
    Write a stream as a QTAG file (atomically).

    Args:
        stream: Time-tag stream
        path: Output file path
    """
    atomic_write_bytes(path, encode_tags(stream))


def _parse_header(header: bytes) -> int:
    if len(header) < TAG_HEADER_SIZE:
        raise TagParseError(f"Truncated header: {len(header)} of {TAG_HEADER_SIZE} bytes", 0)
    magic, version, _, count = struct.unpack(HEADER_FORMAT, header[:TAG_HEADER_SIZE])
    if magic != TAG_MAGIC:
        raise TagParseError(f"Bad magic {magic!r}, expected {TAG_MAGIC!r}", 0)
    if version != TAG_VERSION:
        raise TagParseError(f"Unsupported version {version}", 4)
    return int(count)


def _validate_records(
    records: np.ndarray,
    first_index: int,
    previous_timestamp: Optional[int],
) -> None:
    """Check channel codes and timestamp order; offsets are file-absolute."""
    channels = records["channel"]
    timestamps = records["timestamp"]

    bad_channel = np.nonzero(channels > MAX_CHANNEL)[0]
    if bad_channel.size:
        i = int(bad_channel[0])
        raise TagParseError(
            f"Unknown channel byte {int(channels[i])}", TAG_HEADER_SIZE + (first_index + i) * TAG_RECORD_SIZE
        )

    if len(timestamps) == 0:
        return
    if previous_timestamp is not None and int(timestamps[0]) < previous_timestamp:
        raise TagParseError("Timestamps not monotone", TAG_HEADER_SIZE + first_index * TAG_RECORD_SIZE)
    backwards = np.nonzero(timestamps[1:] < timestamps[:-1])[0]
    if backwards.size:
        i = int(backwards[0]) + 1
        raise TagParseError("Timestamps not monotone", TAG_HEADER_SIZE + (first_index + i) * TAG_RECORD_SIZE)


def iter_tag_chunks(path: str | Path, chunk_records: int = 1 << 20) -> Iterator[TagStream]:
    """
    Stream a QTAG file in chunks of at most `chunk_records` records.

    Every chunk is validated before it is yielded, so consumers never see
    records past the first malformed one.

    Args:
        path: QTAG file
        chunk_records: Records per chunk

    Yields:
        TagStream chunks in file order

    Raises:
        TagParseError: Malformed header, record length, channel or ordering
    """
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as f:
        count = _parse_header(f.read(TAG_HEADER_SIZE))

        body = size - TAG_HEADER_SIZE
        whole, partial = divmod(body, TAG_RECORD_SIZE)
        if partial:
            raise TagParseError(
                f"Truncated record: {partial} trailing bytes", TAG_HEADER_SIZE + whole * TAG_RECORD_SIZE
            )
        if whole < count:
            raise TagParseError(
                f"Header announces {count} records, file holds {whole}", TAG_HEADER_SIZE + whole * TAG_RECORD_SIZE
            )
        if whole > count:
            raise TagParseError(
                f"Trailing data after {count} records", TAG_HEADER_SIZE + count * TAG_RECORD_SIZE
            )

        index = 0
        previous: Optional[int] = None
        while index < count:
            n = min(chunk_records, count - index)
            records = np.frombuffer(f.read(n * TAG_RECORD_SIZE), dtype=RECORD_DTYPE)
            _validate_records(records, index, previous)
            if n:
                previous = int(records["timestamp"][-1])
            yield TagStream(records["channel"].copy(), records["timestamp"].copy())
            index += n


def read_tags(path: str | Path) -> TagStream:
    """
    Read a whole QTAG file.

    Args:
        path: QTAG file

    Returns:
        The stored stream

    Raises:
        TagParseError: Malformed file, with the byte offset of the problem
    """
    chunks = list(iter_tag_chunks(path))
    if not chunks:
        return TagStream(np.empty(0, np.uint8), np.empty(0, np.uint64))
    return TagStream(
        np.concatenate([c.channels for c in chunks]),
        np.concatenate([c.timestamps for c in chunks]),
    )
