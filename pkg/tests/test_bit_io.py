"""Tests for ASCII and packed bit files."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.bit_io import nbits_sidecar, parse_bit_text, read_bits, validate_bits, write_bits
from src.exceptions import BitInputError


def test_ascii_file_is_plain_text(tmp_path):
    path = tmp_path / "bits.txt"
    write_bits(np.array([1, 0, 1, 1]), path)
    assert path.read_text() == "1011"
    assert_array_equal(read_bits(path), [1, 0, 1, 1])


def test_ascii_reader_ignores_surrounding_whitespace(tmp_path):
    path = tmp_path / "bits.txt"
    path.write_text("  0110\n")
    assert_array_equal(read_bits(path), [0, 1, 1, 0])


def test_packed_file_is_msb_first_with_sidecar(tmp_path):
    path = tmp_path / "bits.bin"
    bits = np.array([1, 0, 1, 1, 0, 0, 0, 0, 1, 1])
    write_bits(bits, path, "packed")
    assert path.read_bytes() == bytes([0b10110000, 0b11000000])
    assert nbits_sidecar(path).read_text().strip() == "10"
    assert_array_equal(read_bits(path, "packed"), bits)


@pytest.mark.parametrize("n", [0, 1, 7, 8, 9, 1000])
def test_packed_length_preserved(tmp_path, n):
    path = tmp_path / "bits.bin"
    bits = np.random.default_rng(n).integers(0, 2, n)
    write_bits(bits, path, "packed")
    assert_array_equal(read_bits(path, "packed"), bits)


@pytest.mark.parametrize("count", ["17", "8", "abc"])
def test_packed_sidecar_must_match_file(tmp_path, count):
    path = tmp_path / "bits.bin"
    write_bits(np.ones(12), path, "packed")
    nbits_sidecar(path).write_text(count)
    with pytest.raises(BitInputError):
        read_bits(path, "packed")


def test_packed_file_without_sidecar_is_io_error(tmp_path):
    path = tmp_path / "bits.bin"
    path.write_bytes(b"\xff")
    with pytest.raises(OSError):
        read_bits(path, "packed")


@pytest.mark.parametrize("text, position", [("0120", 2), ("01 1", 2), ("x", 0), ("01\n10", 2)])
def test_non_binary_characters_rejected(text, position):
    with pytest.raises(BitInputError, match=f"position {position}"):
        parse_bit_text(text)


def test_non_binary_values_rejected():
    with pytest.raises(BitInputError, match="position 1"):
        validate_bits(np.array([0, 2, 1]))
    with pytest.raises(BitInputError):
        validate_bits(np.zeros((2, 2)))


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(BitInputError):
        write_bits(np.array([0, 1]), tmp_path / "bits", "hex")
    with pytest.raises(BitInputError):
        read_bits(tmp_path / "bits", "hex")
