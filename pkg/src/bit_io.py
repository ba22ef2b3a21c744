"""Bit string files: ASCII '0'/'1' text or packed MSB-first bytes."""

from pathlib import Path

import numpy as np

from .artifacts import atomic_write_bytes, atomic_write_text
from .exceptions import BitInputError

BIT_FORMATS = ("ascii", "packed")


def nbits_sidecar(path: str | Path) -> Path:
    """Sidecar file holding the valid-bit count of a packed file."""
    path = Path(path)
    return path.with_name(path.name + ".nbits")


def validate_bits(bits: np.ndarray) -> np.ndarray:
    """
    Coerce to a uint8 0/1 array.

    Raises:
        BitInputError: Any value other than 0 or 1
    """
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise BitInputError(f"Bit sequence must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        bad = int(np.nonzero(~np.isin(arr, (0, 1)))[0][0])
        raise BitInputError(f"Bit value {arr[bad]!r} at position {bad} is not 0 or 1")
    return arr.astype(np.uint8)


def parse_bit_text(text: str) -> np.ndarray:
    """
    Parse a '0'/'1' string. Surrounding whitespace is ignored.

    Raises:
        BitInputError: Any other character
    """
    raw = np.frombuffer(text.strip().encode("ascii", errors="replace"), dtype=np.uint8)
    bits = raw - ord("0")
    bad = np.nonzero(bits > 1)[0]
    if bad.size:
        i = int(bad[0])
        raise BitInputError(f"Character {chr(raw[i])!r} at position {i} is not '0' or '1'")
    return bits.astype(np.uint8)


def write_bits(bits: np.ndarray, path: str | Path, fmt: str = "ascii") -> None:
    """
    Write bits atomically.

    Args:
        bits: 0/1 values
        path: Output file
        fmt: 'ascii' (newline-free text) or 'packed' (np.packbits, MSB first,
            final byte zero-padded, bit count in `<path>.nbits`)
    """
    bits = validate_bits(bits)
    if fmt == "ascii":
        atomic_write_bytes(path, (bits + ord("0")).astype(np.uint8).tobytes())
    elif fmt == "packed":
        atomic_write_bytes(path, np.packbits(bits).tobytes())
        atomic_write_text(nbits_sidecar(path), f"{len(bits)}\n")
    else:
        raise BitInputError(f"Unknown bit format '{fmt}', expected one of {BIT_FORMATS}")


def read_bits(path: str | Path, fmt: str = "ascii") -> np.ndarray:
    """
    Read a bit file written by `write_bits`.

    Args:
        path: Bit file
        fmt: 'ascii' or 'packed'

    Returns:
        uint8 0/1 array

    Raises:
        BitInputError: Malformed contents or sidecar
        OSError: File or sidecar missing
    """
    path = Path(path)
    if fmt == "ascii":
        return parse_bit_text(path.read_text(encoding="ascii", errors="replace"))
    if fmt == "packed":
        sidecar = nbits_sidecar(path)
        try:
            n_bits = int(sidecar.read_text().strip())
        except ValueError as e:
            raise BitInputError(f"Bad bit count in {sidecar}") from e
        packed = np.frombuffer(path.read_bytes(), dtype=np.uint8)
        if not (len(packed) - 1) * 8 < n_bits <= len(packed) * 8 and not (n_bits == 0 and len(packed) == 0):
            raise BitInputError(f"{sidecar} announces {n_bits} bits for a {len(packed)}-byte file")
        return np.unpackbits(packed, count=n_bits)
    raise BitInputError(f"Unknown bit format '{fmt}', expected one of {BIT_FORMATS}")
