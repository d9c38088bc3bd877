"""Canonical Huffman coding (the variable-length source code of the traditional stack)."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .channel import BitFrame
from .errors import ConfigurationError, DecodeError, EncodeError


@dataclass(frozen=True)
class HuffmanCodebook:
    codes: dict  # symbol -> codeword string of '0'/'1'
    _decode: dict = field(repr=False, compare=False)  # codeword string -> symbol

    @property
    def lengths(self) -> dict:
        return {s: len(c) for s, c in self.codes.items()}

    def __contains__(self, symbol) -> bool:
        return symbol in self.codes

    def average_length(self, frequencies: Mapping[Hashable, int]) -> float:
        total = sum(frequencies.values())
        return sum(n * len(self.codes[s]) for s, n in frequencies.items() if n > 0) / total

    def is_prefix_free(self) -> bool:
        words = sorted(self.codes.values())
        return all(not b.startswith(a) for a, b in zip(words, words[1:]))


def entropy(frequencies: Mapping[Any, int]) -> float:
    total = sum(frequencies.values())
    return -sum(n / total * math.log2(n / total) for n in frequencies.values() if n > 0)


def code_lengths(frequencies: Mapping[Hashable, int]) -> dict:
    """Huffman code lengths; ties broken by symbol order so the result is unique."""
    symbols = sorted(s for s, n in frequencies.items() if n > 0)
    if not symbols:
        raise ConfigurationError("frequency table has no symbol with positive count")
    if len(symbols) == 1:
        return {symbols[0]: 1}
    # heap entries: (weight, tiebreak, leaf symbols under the node)
    heap = [(frequencies[s], i, [s]) for i, s in enumerate(symbols)]
    heapq.heapify(heap)
    depth = dict.fromkeys(symbols, 0)
    counter = len(symbols)
    while len(heap) > 1:
        w1, _, a = heapq.heappop(heap)
        w2, _, b = heapq.heappop(heap)
        for s in a + b:
            depth[s] += 1
        heapq.heappush(heap, (w1 + w2, counter, a + b))
        counter += 1
    return depth


def canonical_codes(lengths: Mapping[Hashable, int]) -> dict:
    """Assign canonical codewords: shorter first, then by symbol order."""
    codes = {}
    code = 0
    prev_len = 0
    for sym in sorted(lengths, key=lambda s: (lengths[s], s)):
        n = lengths[sym]
        code <<= n - prev_len
        codes[sym] = format(code, f"0{n}b")
        code += 1
        prev_len = n
    return codes


def huffman_build(frequencies: Mapping[Hashable, int]) -> HuffmanCodebook:
    codes = canonical_codes(code_lengths(frequencies))
    return HuffmanCodebook(codes, {c: s for s, c in codes.items()})


def _to_bits(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")


def huffman_encode(symbols: Iterable[Hashable], codebook: HuffmanCodebook, **frame_meta) -> BitFrame:
    try:
        text = "".join(codebook.codes[s] for s in symbols)
    except KeyError as e:
        raise EncodeError(f"symbol {e.args[0]!r} not in codebook") from None
    return BitFrame(_to_bits(text), **frame_meta)


def decode_prefix(
    bits: Sequence[int] | np.ndarray,
    codebook: HuffmanCodebook,
    max_symbols: int | None = None,
    stop: Hashable | None = None,
) -> tuple[list, int]:
    """Decode greedily from the start of ``bits``.

    Stops after ``max_symbols`` symbols, after emitting ``stop``, or when the
    bits run out.  Returns the symbols and the number of bits consumed;
    trailing bits that do not complete a codeword are left unconsumed.
    """
    table = codebook._decode
    out = []
    word = ""
    consumed = 0
    s = "".join("1" if b else "0" for b in np.asarray(bits, dtype=np.uint8).tolist())
    for i, ch in enumerate(s):
        if max_symbols is not None and len(out) >= max_symbols:
            break
        word += ch
        if word in table:
            out.append(table[word])
            word = ""
            consumed = i + 1
            if stop is not None and out[-1] == stop:
                break
    return out, consumed


def huffman_decode(frame: BitFrame | np.ndarray, codebook: HuffmanCodebook) -> list:
    bits = frame.bits if isinstance(frame, BitFrame) else np.asarray(frame, dtype=np.uint8)
    symbols, consumed = decode_prefix(bits, codebook)
    if consumed != len(bits):
        raise DecodeError(f"{len(bits) - consumed} dangling bits after last codeword")
    return symbols
