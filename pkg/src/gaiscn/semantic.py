"""Knowledge-assisted semantic codec (edge layer).

Each object becomes a fixed-layout record of binary fields.  Fields are
protected by repetition according to their semantic importance, decoded by
majority vote and then projected onto the nearest value the shared
vocabulary allows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import BitFrame, ChannelConfig, transmit
from .errors import KnowledgeMismatchError
from .knowledge import KnowledgeBase
from .scene import Scene, SceneObject, scene_errors

VERSION_BITS = 8
RECORD_FIELDS = ("class", "row", "col", "size", "color")


@dataclass(frozen=True)
class ProtectionProfile:
    """Repetition factor per field group; the edge's choice of semantic encoder."""

    header: int = 5
    class_: int = 3
    attribute: int = 1

    def __post_init__(self):
        for r in (self.header, self.class_, self.attribute):
            if r < 1 or r % 2 == 0:
                raise ValueError("repetition factors must be odd and positive")


STANDARD = ProtectionProfile(5, 3, 1)
ROBUST = ProtectionProfile(5, 5, 3)


def select_profile(
    snr_db: float,
    threshold_db: float = 6.0,
    standard: ProtectionProfile = STANDARD,
    robust: ProtectionProfile = ROBUST,
) -> ProtectionProfile:
    """Pick the pre-trained encoder for the current channel state."""
    return standard if snr_db >= threshold_db else robust


def bits_for(domain_size: int) -> int:
    return max(1, int(domain_size - 1).bit_length())


@dataclass(frozen=True)
class FrameLayout:
    widths: dict  # field name -> raw width in bits
    count_bits: int
    profile: ProtectionProfile

    def reps(self, name: str) -> int:
        return self.profile.class_ if name == "class" else self.profile.attribute

    @property
    def header_width(self) -> int:
        return (self.count_bits + VERSION_BITS) * self.profile.header

    @property
    def record_width(self) -> int:
        return sum(self.widths[f] * self.reps(f) for f in RECORD_FIELDS)

    def frame_width(self, n_objects: int) -> int:
        return self.header_width + n_objects * self.record_width


def frame_layout(kb: KnowledgeBase, profile: ProtectionProfile = STANDARD) -> FrameLayout:
    h, w = kb.canvas
    v = kb.vocab
    widths = {
        "class": bits_for(v.n_classes),
        "row": bits_for(h),
        "col": bits_for(w),
        "size": bits_for(v.n_sizes),
        "color": bits_for(v.n_colors),
    }
    return FrameLayout(widths, bits_for(h * w + 1), profile)


@dataclass(frozen=True)
class SemanticRecord:
    class_field: np.ndarray
    row_field: np.ndarray
    col_field: np.ndarray
    size_field: np.ndarray
    color_field: np.ndarray

    def bits(self) -> np.ndarray:
        return np.concatenate([self.class_field, self.row_field, self.col_field, self.size_field, self.color_field])


@dataclass(frozen=True)
class SemanticFrame:
    header: tuple[int, int]  # (object_count, vocab version)
    records: tuple[SemanticRecord, ...]
    layout: FrameLayout
    header_bits: np.ndarray

    def bits(self) -> np.ndarray:
        return np.concatenate([self.header_bits] + [r.bits() for r in self.records]).astype(np.uint8)

    def __len__(self) -> int:
        return self.layout.frame_width(len(self.records))

    def hex_lines(self) -> list[str]:
        """Debug dump: header then one record per line."""
        def to_hex(bits):
            return format(int("".join(map(str, bits.tolist())) or "0", 2), "x")
        return [to_hex(self.header_bits)] + [to_hex(r.bits()) for r in self.records]


def _field(value: int, width: int, reps: int) -> np.ndarray:
    raw = np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)
    return np.tile(raw, reps)


def _majority(bits: np.ndarray, width: int, reps: int) -> int:
    votes = bits.reshape(reps, width).sum(axis=0)
    raw = (votes * 2 > reps).astype(np.uint8)
    return int("".join(map(str, raw.tolist())), 2)


def nearest_valid(value: int, domain_size: int) -> int:
    """Valid index closest in Hamming distance; ties go to the lowest index."""
    if 0 <= value < domain_size:
        return value
    dists = [bin(value ^ i).count("1") for i in range(domain_size)]
    return int(np.argmin(dists))


def semantic_encode(scene: Scene, kb: KnowledgeBase, profile: ProtectionProfile = STANDARD) -> SemanticFrame:
    """One record per object in ascending id order."""
    errs = scene_errors(scene, kb.vocab)
    if scene.canvas != kb.canvas:
        errs.append(f"canvas {scene.canvas} differs from shared canvas {kb.canvas}")
    if scene.background != kb.background:
        errs.append(f"background {scene.background} differs from shared background {kb.background}")
    if errs:
        raise KnowledgeMismatchError("; ".join(errs))
    layout = frame_layout(kb, profile)
    wd = layout.widths
    records = []
    for o in sorted(scene.objects, key=lambda o: o.id):
        r, c = o.position
        records.append(
            SemanticRecord(
                _field(o.class_id, wd["class"], layout.reps("class")),
                _field(r, wd["row"], layout.reps("row")),
                _field(c, wd["col"], layout.reps("col")),
                _field(kb.vocab.size_index(o.size), wd["size"], layout.reps("size")),
                _field(o.color, wd["color"], layout.reps("color")),
            )
        )
    n = len(records)
    version = kb.version % (1 << VERSION_BITS)
    header_bits = np.concatenate(
        [_field(n, layout.count_bits, profile.header), _field(version, VERSION_BITS, profile.header)]
    )
    return SemanticFrame((n, version), tuple(records), layout, header_bits)


def semantic_decode(
    bits: np.ndarray | BitFrame,
    kb: KnowledgeBase,
    profile: ProtectionProfile = STANDARD,
    project: bool = True,
) -> tuple[Scene, bool]:
    """Decode a received frame.  Returns ``(scene, semantic_failure)``.

    A header whose count disagrees with the received length, or whose
    version disagrees with ``kb``, is unrecoverable: the result is an empty
    scene with the failure flag set.  ``project=False`` is the ablation that
    keeps raw majority values, which may fall outside the vocabulary.
    """
    bits = np.asarray(bits.bits if isinstance(bits, BitFrame) else bits, dtype=np.uint8)
    layout = frame_layout(kb, profile)
    empty = Scene(kb.canvas, kb.background, ())
    hw = layout.header_width
    if bits.size < hw:
        return empty, True
    cb, rh = layout.count_bits, profile.header
    count = _majority(bits[: cb * rh], cb, rh)
    version = _majority(bits[cb * rh : hw], VERSION_BITS, rh)
    if version != kb.version % (1 << VERSION_BITS) or layout.frame_width(count) != bits.size:
        return empty, True

    h, w = kb.canvas
    v = kb.vocab
    domains = {"class": v.n_classes, "row": h, "col": w, "size": v.n_sizes, "color": v.n_colors}
    objects = []
    pos = hw
    for i in range(count):
        vals = {}
        for name in RECORD_FIELDS:
            width, reps = layout.widths[name], layout.reps(name)
            raw = _majority(bits[pos : pos + width * reps], width, reps)
            pos += width * reps
            vals[name] = nearest_valid(raw, domains[name]) if project else raw
        size_idx = vals["size"]
        size = v.size_levels[size_idx] if size_idx < v.n_sizes else 0
        objects.append(SceneObject(i, vals["class"], (vals["row"], vals["col"]), size, vals["color"]))
    return Scene(kb.canvas, kb.background, tuple(objects)), False


@dataclass(frozen=True)
class JsccResult:
    scene: Scene
    bits: int  # bits on air
    semantic_failure: bool
    bit_errors: int
    frame: BitFrame


def jscc_session(
    scene: Scene,
    kb: KnowledgeBase,
    cfg: ChannelConfig,
    *,
    rx_kb: KnowledgeBase | None = None,
    profile: ProtectionProfile | None = None,
    direction: str = "downlink",
    scheme_tag: str | None = None,
    project: bool = True,
) -> JsccResult:
    """Semantic encode, transmit, semantic decode.

    ``rx_kb`` is the receiver's replica (defaults to ``kb``); differing
    versions raise :class:`KnowledgeMismatchError` before anything is sent.
    """
    rx_kb = kb if rx_kb is None else rx_kb
    if rx_kb.version != kb.version:
        raise KnowledgeMismatchError(f"encoder kb v{kb.version} != decoder kb v{rx_kb.version}")
    profile = profile or select_profile(cfg.snr_db)
    frame = semantic_encode(scene, kb, profile)
    sent = BitFrame(frame.bits(), direction, scheme_tag, "semantic")
    received, n_err = transmit(sent, cfg)
    decoded, failed = semantic_decode(received, rx_kb, profile, project=project)
    return JsccResult(decoded, len(sent), failed, n_err, sent)
