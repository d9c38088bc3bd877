"""BPSK over AWGN with exact bit accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DIRECTIONS = ("uplink", "downlink", "control")


@dataclass(frozen=True, eq=False)
class BitFrame:
    """A counted payload of bits; the unit of all bit accounting."""

    bits: np.ndarray
    direction: str = "downlink"
    scheme_tag: str | None = None
    purpose: str = ""

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8).ravel()
        if b.size and b.max() > 1:
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", b)
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if self.scheme_tag not in (None, "A", "B", "C"):
            raise ValueError(f"unknown scheme tag {self.scheme_tag!r}")

    def __len__(self) -> int:
        return int(self.bits.size)

    def with_bits(self, bits) -> "BitFrame":
        return BitFrame(bits, self.direction, self.scheme_tag, self.purpose)

    def __eq__(self, other):
        if not isinstance(other, BitFrame):
            return NotImplemented
        return (
            np.array_equal(self.bits, other.bits)
            and (self.direction, self.scheme_tag, self.purpose)
            == (other.direction, other.scheme_tag, other.purpose)
        )

    __hash__ = None


@dataclass(frozen=True)
class ChannelConfig:
    """AWGN channel; ``snr_db`` is Es/N0 per BPSK symbol."""

    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")


def noise_sigma(snr_db: float) -> float:
    """Per-dimension noise std for unit-energy BPSK at Es/N0 = ``snr_db``."""
    return math.sqrt(1.0 / (2.0 * 10.0 ** (snr_db / 10.0)))


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def theoretical_ber(snr_db: float) -> float:
    """Uncoded BPSK bit error probability Q(sqrt(2 Es/N0))."""
    return q_function(math.sqrt(2.0 * 10.0 ** (snr_db / 10.0)))


def transmit_bits(bits: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Modulate, add noise, hard-demodulate.  Consumes ``len(bits)`` normals from ``rng``."""
    bits = np.asarray(bits, dtype=np.uint8)
    symbols = 1.0 - 2.0 * bits  # 0 -> +1, 1 -> -1
    received = symbols + rng.normal(0.0, noise_sigma(snr_db), size=bits.shape)
    return (received < 0).astype(np.uint8)


def transmit(frame: BitFrame, cfg: ChannelConfig) -> tuple[BitFrame, int]:
    """Send ``frame`` over the channel; returns the received frame and its Hamming distance."""
    rng = np.random.default_rng(cfg.seed)
    out = transmit_bits(frame.bits, cfg.snr_db, rng)
    return frame.with_bits(out), int(np.count_nonzero(out != frame.bits))


@dataclass
class BitLedger:
    """Per-hop record of every frame put on the air in one session."""

    hops: list[tuple[str, str, int]] = field(default_factory=list)  # (direction, purpose, bits)

    def record(self, frame: BitFrame) -> None:
        self.hops.append((frame.direction, frame.purpose, len(frame)))

    def add(self, direction: str, purpose: str, n_bits: int) -> None:
        self.hops.append((direction, purpose, int(n_bits)))

    def total(self, direction: str | None = None) -> int:
        return sum(n for d, _, n in self.hops if direction is None or d == direction)
