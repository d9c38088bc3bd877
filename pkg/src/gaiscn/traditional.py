"""The traditional stack: Huffman source coding, LDPC channel coding, optional ARQ.

Codebooks are built once per corpus and shared by every sender and receiver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import BitFrame, BitLedger, transmit_bits
from .gai import END, Prompt, parse_prompt, prompt_frequencies, prompt_tokens
from .huffman import HuffmanCodebook, decode_prefix, huffman_build, huffman_encode
from .knowledge import KnowledgeBase
from .ldpc import LdpcCode, bit_flip_decode, ldpc_encode, pad_to_blocks
from .scene import Image, Scene, render, serialize_scene

TEXT_ALPHABET = [chr(c) for c in range(32, 127)] + ["\n"]


@dataclass(frozen=True)
class SourceCodebooks:
    pixel: HuffmanCodebook  # luminance values 0..255
    prompt: HuffmanCodebook  # prompt wire tokens
    text: HuffmanCodebook  # characters of the scene text format


def pixel_frequencies(images: Iterable[Image]) -> dict[int, int]:
    counts = np.ones(256, dtype=np.int64)  # add-one: any image stays encodable
    for img in images:
        counts += np.bincount(img.pixels.ravel(), minlength=256)
    return {v: int(n) for v, n in enumerate(counts)}


def text_frequencies(texts: Iterable[str]) -> dict[str, int]:
    freq = dict.fromkeys(TEXT_ALPHABET, 1)
    for t in texts:
        for ch in t:
            freq[ch] = freq.get(ch, 1) + 1
    return freq


def build_codebooks(
    corpus: Sequence[Scene],
    kb: KnowledgeBase,
    prompts: Iterable[Prompt],
    resolution: tuple[int, int],
) -> SourceCodebooks:
    vocab = kb.vocab
    return SourceCodebooks(
        pixel=huffman_build(pixel_frequencies(render(s, vocab, resolution) for s in corpus)),
        prompt=huffman_build(prompt_frequencies(prompts, kb)),
        text=huffman_build(text_frequencies(serialize_scene(s, vocab) for s in corpus)),
    )


def send_coded(
    payload: BitFrame,
    code: LdpcCode,
    snr_db: float,
    rng: np.random.Generator,
    ledger: BitLedger | None = None,
    max_attempts: int = 1,
) -> tuple[np.ndarray, int]:
    """LDPC-encode ``payload`` block by block and send it.

    A block whose decoder does not converge is resent, up to
    ``max_attempts`` transmissions in total; the last attempt is kept either
    way.  Every transmitted codeword is charged to ``ledger``.  Returns the
    decoded (zero-padded) payload bits and the number of attempts used by
    the slowest block.
    """
    msgs = pad_to_blocks(payload.bits, code.k)
    codewords = ldpc_encode(msgs, code)
    decoded = np.zeros_like(msgs)
    pending = np.arange(len(msgs))
    attempts = 0
    while pending.size and attempts < max(1, max_attempts):
        attempts += 1
        rx = transmit_bits(codewords[pending], snr_db, rng)
        if ledger is not None:
            ledger.add(payload.direction, payload.purpose, rx.size)
        words, converged = bit_flip_decode(rx, code)
        decoded[pending] = words[:, : code.k]
        pending = pending[~converged]
    return decoded.ravel(), attempts


def encode_image(image: Image, codebook: HuffmanCodebook, **meta) -> BitFrame:
    return huffman_encode(image.pixels.ravel().tolist(), codebook, **meta)


def decode_image(bits: np.ndarray, codebook: HuffmanCodebook, resolution: tuple[int, int], fill: int = 0) -> Image:
    """Best-effort pixel decoding; missing pixels take ``fill``."""
    H, W = resolution
    values, _ = decode_prefix(bits, codebook, max_symbols=H * W)
    px = np.full(H * W, fill, dtype=np.uint8)
    px[: len(values)] = values
    return Image(px.reshape(H, W))


def encode_prompt(prompt: Prompt, codebook: HuffmanCodebook, **meta) -> BitFrame:
    return huffman_encode(prompt_tokens(prompt), codebook, **meta)


def decode_prompt(bits: np.ndarray, codebook: HuffmanCodebook, k: int) -> Prompt:
    tokens, _ = decode_prefix(bits, codebook, stop=END)
    return parse_prompt(tokens, k)


def encode_text(text: str, codebook: HuffmanCodebook, **meta) -> BitFrame:
    return huffman_encode(text, codebook, **meta)


__all__ = [
    "SourceCodebooks",
    "build_codebooks",
    "send_coded",
    "encode_image",
    "decode_image",
    "encode_prompt",
    "decode_prompt",
    "encode_text",
]
