"""Packed row vectors.

A row is stored as little-endian 64-bit words: column ``c`` lives in word
``c // 64`` at bit ``c % 64``.  Bits beyond ``width`` in the last word are
always zero.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .errors import WidthMismatch

WORD_BITS = 64


def n_words(width: int) -> int:
    return (width + WORD_BITS - 1) // WORD_BITS


def tail_mask(width: int) -> np.uint64:
    rem = width % WORD_BITS
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean/0-1 array into uint64 words."""
    bits = np.asarray(bits, dtype=bool).ravel()
    nw = n_words(len(bits))
    buf = np.zeros(nw * 8, dtype=np.uint8)
    packed = np.packbits(bits, bitorder="little")
    buf[: len(packed)] = packed
    return buf.view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, width: int) -> np.ndarray:
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little", count=width).astype(bool)


def invert_words(words: np.ndarray, width: int) -> np.ndarray:
    out = ~words
    if len(out):
        out[-1] &= tail_mask(width)
    return out


def maj_words(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (a & b) | (c & (a | b))


def min_words(a: np.ndarray, b: np.ndarray, c: np.ndarray, width: int) -> np.ndarray:
    return invert_words(maj_words(a, b, c), width)


def fill_words(width: int, bit: int) -> np.ndarray:
    if bit:
        w = np.full(n_words(width), 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
        if len(w):
            w[-1] &= tail_mask(width)
        return w
    return np.zeros(n_words(width), dtype=np.uint64)


class RowVector:
    """Fixed-width packed bit vector holding one memory row's logical contents."""

    __slots__ = ("words", "width")

    def __init__(self, words: np.ndarray, width: int):
        words = np.asarray(words, dtype=np.uint64)
        if width < 0 or len(words) != n_words(width):
            raise WidthMismatch(f"{len(words)} words cannot hold exactly {width} bits")
        self.words = words
        self.width = width

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, width: int) -> "RowVector":
        return cls(fill_words(width, 0), width)

    @classmethod
    def ones(cls, width: int) -> "RowVector":
        return cls(fill_words(width, 1), width)

    @classmethod
    def filled(cls, width: int, bit: int) -> "RowVector":
        return cls(fill_words(width, bit), width)

    @classmethod
    def from_bits(cls, bits) -> "RowVector":
        bits = np.asarray(bits, dtype=bool).ravel()
        return cls(pack_bits(bits), len(bits))

    @classmethod
    def from_string(cls, s: str) -> "RowVector":
        """``"1010"`` puts column 0 = 1, column 1 = 0, ..."""
        return cls.from_bits(np.array([ch == "1" for ch in s if ch in "01"], dtype=bool))

    # views --------------------------------------------------------------
    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.width)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.to_bits())

    def __getitem__(self, col: int) -> int:
        if not 0 <= col < self.width:
            raise IndexError(col)
        return int((int(self.words[col // WORD_BITS]) >> (col % WORD_BITS)) & 1)

    def __len__(self) -> int:
        return self.width

    def popcount(self) -> int:
        return int(np.unpackbits(self.words.view(np.uint8)).sum())

    def slice(self, start: int, stop: int) -> "RowVector":
        if start % WORD_BITS == 0 and 0 <= start <= stop <= self.width:
            w = self.words[start // WORD_BITS: start // WORD_BITS + n_words(stop - start)].copy()
            if len(w):
                w[-1] &= tail_mask(stop - start)
            return RowVector(w, stop - start)
        return RowVector.from_bits(self.to_bits()[start:stop])

    # bitwise ----------------------------------------------------------
    def _check(self, other: "RowVector") -> None:
        if self.width != other.width:
            raise WidthMismatch(f"row widths differ: {self.width} vs {other.width}")

    def __and__(self, other: "RowVector") -> "RowVector":
        self._check(other)
        return RowVector(self.words & other.words, self.width)

    def __or__(self, other: "RowVector") -> "RowVector":
        self._check(other)
        return RowVector(self.words | other.words, self.width)

    def __xor__(self, other: "RowVector") -> "RowVector":
        self._check(other)
        return RowVector(self.words ^ other.words, self.width)

    def __invert__(self) -> "RowVector":
        return RowVector(invert_words(self.words, self.width), self.width)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RowVector):
            return NotImplemented
        return self.width == other.width and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.width, self.words.tobytes()))

    def __repr__(self) -> str:
        if self.width <= 64:
            return f"RowVector('{self.to_string()}')"
        return f"RowVector(width={self.width}, popcount={self.popcount()})"


def majority(a: RowVector, b: RowVector, c: RowVector) -> RowVector:
    a._check(b)
    a._check(c)
    return RowVector(maj_words(a.words, b.words, c.words), a.width)


def minority(a: RowVector, b: RowVector, c: RowVector) -> RowVector:
    return ~majority(a, b, c)


def concat(rows) -> RowVector:
    rows = list(rows)
    if all(r.width % WORD_BITS == 0 for r in rows):
        words = np.concatenate([r.words for r in rows]) if rows else np.zeros(0, np.uint64)
        return RowVector(words, sum(r.width for r in rows))
    return RowVector.from_bits(np.concatenate([r.to_bits() for r in rows]))


def digest_bits(bit_arrays) -> str:
    """64-bit BLAKE2b checksum over a sequence of bit arrays.

    Each array is packed LSB-first into bytes and prefixed by its bit length
    (8-byte little-endian), so differently shaped outputs never collide trivially.
    """
    h = hashlib.blake2b(digest_size=8)
    for bits in bit_arrays:
        bits = np.asarray(bits, dtype=bool)
        h.update(len(bits).to_bytes(8, "little"))
        h.update(np.packbits(bits, bitorder="little").tobytes())
    return h.hexdigest()


def digest_rows(rows) -> str:
    """Same checksum as :func:`digest_bits`, computed from packed rows without unpacking."""
    h = hashlib.blake2b(digest_size=8)
    for row in rows:
        h.update(row.width.to_bytes(8, "little"))
        words = row.words.astype("<u8", copy=True)
        if len(words):
            words[-1] &= tail_mask(row.width)
        h.update(words.view(np.uint8)[: (row.width + 7) // 8].tobytes())
    return h.hexdigest()
