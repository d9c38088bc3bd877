"""Structured scenes, a deterministic luminance renderer and a seeded corpus generator.

A scene is a grid canvas holding objects (class, position, size, color).  It
is the semantic-level stand-in for a transmitted image; ``render`` turns it
into pixels so that pixel metrics can be computed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, ConfigurationError

DEFAULT_CLASSES = (
    "bear",
    "tree",
    "ground",
    "sky",
    "grass",
    "rock",
    "river",
    "house",
    "bird",
    "flower",
)
# color index -> 8-bit luminance
DEFAULT_PALETTE = (16, 48, 80, 112, 144, 176, 208, 240)
DEFAULT_SIZE_LEVELS = (1, 2, 3, 4)
DEFAULT_CANVAS = (16, 16)
DEFAULT_RESOLUTION = (64, 64)


@dataclass(frozen=True)
class Vocabulary:
    """Shared background vocabulary: class labels and attribute domains."""

    class_labels: tuple[str, ...] = DEFAULT_CLASSES
    palette: tuple[int, ...] = DEFAULT_PALETTE
    size_levels: tuple[int, ...] = DEFAULT_SIZE_LEVELS
    version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        object.__setattr__(self, "palette", tuple(int(v) for v in self.palette))
        object.__setattr__(self, "size_levels", tuple(int(v) for v in self.size_levels))
        if not self.class_labels:
            raise ConfigurationError("vocabulary needs at least one class label")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise ConfigurationError("duplicate class labels")
        if any(not label or any(c.isspace() for c in label) for label in self.class_labels):
            raise ConfigurationError("class labels must be non-empty and whitespace-free")
        if not self.palette or not self.size_levels:
            raise ConfigurationError("attribute domains must be non-empty")
        if any(not 0 <= v <= 255 for v in self.palette):
            raise ConfigurationError("palette luminances must lie in [0, 255]")
        if any(s < 1 for s in self.size_levels) or len(set(self.size_levels)) != len(self.size_levels):
            raise ConfigurationError("size levels must be distinct positive integers")
        if self.version < 1:
            raise ConfigurationError("vocabulary version must be >= 1")

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    @property
    def n_colors(self) -> int:
        return len(self.palette)

    @property
    def n_sizes(self) -> int:
        return len(self.size_levels)

    @property
    def attribute_domains(self) -> dict[str, tuple[int, ...]]:
        return {"color": tuple(range(self.n_colors)), "size": self.size_levels}

    def class_id(self, label: str) -> int:
        try:
            return self.class_labels.index(label)
        except ValueError:
            raise ConfigurationError(f"unknown class label {label!r}") from None

    def size_index(self, size: int) -> int:
        return self.size_levels.index(size)

    def serialize(self) -> str:
        """Canonical text form; its length is what knowledge sharing costs."""
        return (
            f"vocab {self.version}\n"
            f"classes {' '.join(self.class_labels)}\n"
            f"palette {' '.join(map(str, self.palette))}\n"
            f"sizes {' '.join(map(str, self.size_levels))}\n"
        )


@dataclass(frozen=True)
class SceneObject:
    id: int
    class_id: int
    position: tuple[int, int]  # (row, col) of the top-left grid cell
    size: int  # side length in grid cells, one of the vocabulary size levels
    color: int  # palette index

    def area(self, canvas: tuple[int, int]) -> int:
        """Number of canvas cells covered after clipping at the canvas edge."""
        h, w = canvas
        r, c = self.position
        return max(0, min(r + self.size, h) - r) * max(0, min(c + self.size, w) - c)

    def salience(self, canvas: tuple[int, int]) -> int:
        return self.size * self.area(canvas)


@dataclass(frozen=True)
class Scene:
    canvas: tuple[int, int] = DEFAULT_CANVAS
    background: int = 0
    objects: tuple[SceneObject, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "canvas", tuple(self.canvas))
        object.__setattr__(self, "objects", tuple(self.objects))

    def __len__(self) -> int:
        return len(self.objects)


@dataclass(frozen=True, eq=False)
class Image:
    pixels: np.ndarray  # (H, W) uint8 luminance

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


def scene_errors(scene: Scene, vocab: Vocabulary) -> list[str]:
    """All invariant violations of ``scene`` against ``vocab`` (empty if valid)."""
    errs = []
    h, w = scene.canvas
    if h < 1 or w < 1:
        errs.append(f"canvas {scene.canvas} not positive")
    if not 0 <= scene.background < vocab.n_colors:
        errs.append(f"background {scene.background} outside palette")
    ids = [o.id for o in scene.objects]
    if len(set(ids)) != len(ids):
        errs.append("object ids not unique")
    for o in scene.objects:
        if not 0 <= o.class_id < vocab.n_classes:
            errs.append(f"object {o.id}: class {o.class_id} outside vocabulary")
        if not 0 <= o.color < vocab.n_colors:
            errs.append(f"object {o.id}: color {o.color} outside palette")
        if o.size not in vocab.size_levels:
            errs.append(f"object {o.id}: size {o.size} not a size level")
        r, c = o.position
        if not (0 <= r < h and 0 <= c < w):
            errs.append(f"object {o.id}: position {o.position} outside canvas")
    return errs


def is_valid_scene(scene: Scene, vocab: Vocabulary) -> bool:
    return not scene_errors(scene, vocab)


def class_prototypes(vocab: Vocabulary) -> list[tuple[int, int]]:
    """Typical (color index, size level) per class; the generator's mode and the kb prior."""
    protos = []
    for cid in range(vocab.n_classes):
        color = (3 * cid + 1) % vocab.n_colors
        size = vocab.size_levels[cid % vocab.n_sizes]
        protos.append((color, size))
    return protos


def generate_scene(
    seed: int,
    object_count: int,
    vocab: Vocabulary,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    background: int = 0,
    typical_prob: float = 0.7,
) -> Scene:
    """Random scene with ``object_count`` objects at distinct cells.

    Each object takes its class prototype attributes with probability
    ``typical_prob`` and uniform attributes otherwise.
    """
    if object_count < 0:
        raise ConfigurationError("object_count must be >= 0")
    h, w = canvas
    if object_count > h * w:
        raise CapacityError(f"{object_count} objects do not fit on a {h}x{w} canvas")
    rng = np.random.default_rng(seed)
    cells = rng.choice(h * w, size=object_count, replace=False)
    protos = class_prototypes(vocab)
    objects = []
    for i, cell in enumerate(cells):
        cid = int(rng.integers(vocab.n_classes))
        if rng.random() < typical_prob:
            color, size = protos[cid]
        else:
            color = int(rng.integers(vocab.n_colors))
            size = vocab.size_levels[int(rng.integers(vocab.n_sizes))]
        objects.append(SceneObject(i, cid, (int(cell) // w, int(cell) % w), size, color))
    return Scene(canvas, background, tuple(objects))


def generate_corpus(
    size: int,
    vocab: Vocabulary,
    seed: int,
    object_count_range: tuple[int, int] = (1, 8),
    canvas: tuple[int, int] = DEFAULT_CANVAS,
) -> list[Scene]:
    """``size`` scenes with object counts drawn uniformly from the inclusive range."""
    lo, hi = object_count_range
    if size < 1:
        raise ConfigurationError("corpus size must be >= 1")
    if not 0 <= lo <= hi:
        raise ConfigurationError(f"bad object count range {object_count_range}")
    ss = np.random.SeedSequence(seed)
    counts = np.random.default_rng(ss.spawn(1)[0]).integers(lo, hi + 1, size=size)
    scene_seeds = ss.generate_state(size, dtype=np.uint64)
    return [generate_scene(int(s), int(n), vocab, canvas) for s, n in zip(scene_seeds, counts)]


def render(scene: Scene, vocab: Vocabulary, resolution: tuple[int, int] = DEFAULT_RESOLUTION) -> Image:
    H, W = resolution
    if H < 1 or W < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    ch, cw = scene.canvas
    px = np.full((H, W), vocab.palette[scene.background], dtype=np.uint8)
    for o in sorted(scene.objects, key=lambda o: o.id):
        r, c = o.position
        r0, r1 = r * H // ch, min(r + o.size, ch) * H // ch
        c0, c1 = c * W // cw, min(c + o.size, cw) * W // cw
        px[r0:r1, c0:c1] = vocab.palette[o.color]
    return Image(px)


def scene_object_multiset(scene: Scene) -> Counter:
    return Counter(o.class_id for o in scene.objects)


def class_set(scene: Scene) -> set[int]:
    return {o.class_id for o in scene.objects}


# -- canonical text format ---------------------------------------------------


def serialize_scene(scene: Scene, vocab: Vocabulary) -> str:
    h, w = scene.canvas
    lines = [f"scene {h} {w} {scene.background}"]
    for o in sorted(scene.objects, key=lambda o: o.id):
        r, c = o.position
        lines.append(f"{o.id} {vocab.class_labels[o.class_id]} {r} {c} {o.size} {o.color}")
    return "\n".join(lines) + "\n"


def _parse_block(lines: Sequence[str], vocab: Vocabulary) -> Scene:
    head = lines[0].split()
    if len(head) != 4 or head[0] != "scene":
        raise ValueError(f"bad scene header {lines[0]!r}")
    h, w, bg = map(int, head[1:])
    objects = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"bad object line {line!r}")
        oid, label, r, c, size, color = parts
        objects.append(SceneObject(int(oid), vocab.class_id(label), (int(r), int(c)), int(size), int(color)))
    return Scene((h, w), bg, tuple(objects))


def parse_scenes(text: str, vocab: Vocabulary) -> list[Scene]:
    blocks: list[list[str]] = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("scene "):
            blocks.append([line])
        elif not blocks:
            raise ValueError("object line before any scene header")
        else:
            blocks[-1].append(line)
    return [_parse_block(b, vocab) for b in blocks]


def parse_scene(text: str, vocab: Vocabulary) -> Scene:
    scenes = parse_scenes(text, vocab)
    if len(scenes) != 1:
        raise ValueError(f"expected one scene, found {len(scenes)}")
    return scenes[0]


def write_corpus(path: str | Path, scenes: Iterable[Scene], vocab: Vocabulary) -> None:
    text = "".join(serialize_scene(s, vocab) for s in scenes)
    # newline="\n" keeps the file byte-identical across platforms
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(text)


def read_corpus(path: str | Path, vocab: Vocabulary) -> list[Scene]:
    with open(path, encoding="ascii") as f:
        return parse_scenes(f.read(), vocab)
