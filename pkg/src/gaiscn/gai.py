"""Deterministic reference implementations of the local and global generative models.

* local (mobile): keyword extraction, goal identification, semantic calibration
* global (cloud): prompt-conditioned content regeneration with per-user branches

Requests and responses are plain frozen records so that an external model
service could stand in for these functions.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, KnowledgeMismatchError
from .knowledge import KnowledgeBase, UserProfile
from .scene import Scene, SceneObject

GOALS = ("deliver-image", "deliver-summary")
SERVICE_KINDS = {"image-delivery": 0, "summary-delivery": 1}
QUADRANTS = ("NW", "NE", "SW", "SE")


@dataclass(frozen=True)
class Keyword:
    class_id: int
    quadrant: int | None = None  # index into QUADRANTS
    size: int | None = None


@dataclass(frozen=True)
class Prompt:
    goal_token: int
    keyword_tokens: tuple[Keyword, ...] = ()
    k: int = 3
    version: int | None = None  # vocabulary version of the sender's knowledge

    def __post_init__(self):
        object.__setattr__(self, "keyword_tokens", tuple(self.keyword_tokens))
        if len(self.keyword_tokens) > self.k:
            raise ValueError(f"{len(self.keyword_tokens)} keywords exceed budget k={self.k}")

    @property
    def classes(self) -> list[int]:
        return [kw.class_id for kw in self.keyword_tokens]


def identify_goal(service_kind: str) -> int:
    try:
        return SERVICE_KINDS[service_kind]
    except KeyError:
        raise ConfigurationError(f"unknown service kind {service_kind!r}") from None


def quadrant_of(obj: SceneObject, canvas: tuple[int, int]) -> int:
    h, w = canvas
    r, c = obj.position
    # twice the centre coordinate of the clipped extent, compared against the canvas size
    bottom = 2 * r + min(obj.size, h - r) >= h
    right = 2 * c + min(obj.size, w - c) >= w
    return 2 * int(bottom) + int(right)


def class_salience(scene: Scene) -> dict[int, int]:
    totals: dict[int, int] = defaultdict(int)
    for o in scene.objects:
        totals[o.class_id] += o.salience(scene.canvas)
    return dict(totals)


def extract_keywords(scene: Scene, profile: UserProfile | None, k: int, goal: int = 0, version: int | None = None) -> Prompt:
    """Top-``k`` classes by summed salience (ties to the lower class id).

    Each keyword carries the quadrant of that class's most salient instance.
    ``profile`` is part of the model interface; the reference ranking does
    not personalise extraction.
    """
    if k < 1:
        raise ConfigurationError("keyword budget k must be >= 1")
    totals = class_salience(scene)
    ranked = sorted(totals, key=lambda cid: (-totals[cid], cid))[:k]
    keywords = []
    for cid in ranked:
        largest = min((o for o in scene.objects if o.class_id == cid), key=lambda o: (-o.salience(scene.canvas), o.id))
        keywords.append(Keyword(cid, quadrant_of(largest, scene.canvas)))
    return Prompt(goal, tuple(keywords), k, version)


def _check_prompt(prompt: Prompt, kb: KnowledgeBase) -> None:
    if prompt.version is not None and prompt.version != kb.version:
        raise KnowledgeMismatchError(f"prompt vocabulary v{prompt.version} != cloud kb v{kb.version}")
    for kw in prompt.keyword_tokens:
        if not 0 <= kw.class_id < kb.vocab.n_classes:
            raise KnowledgeMismatchError(f"class {kw.class_id} unknown to kb v{kb.version}")


def generate_content(prompt: Prompt, profile: UserProfile, kb: KnowledgeBase, seed: int, jitter: int = 2) -> Scene:
    """One object per keyword near its quadrant centre.

    Attributes follow the user's branch preferences, falling back to the kb
    prior.  Position jitter is the only source of variation and comes from
    ``seed``.
    """
    _check_prompt(prompt, kb)
    h, w = kb.canvas
    objects = []
    for i, kw in enumerate(prompt.keyword_tokens):
        color, size = profile.preferences.get(kw.class_id, kb.prior(kw.class_id))
        if color >= kb.vocab.n_colors or size not in kb.vocab.size_levels:
            raise KnowledgeMismatchError(f"user {profile.user_id} preference outside kb v{kb.version}")
        if kw.quadrant is None:
            cr, cc = h // 2, w // 2
        else:
            cr = (3 * h // 4) if kw.quadrant >= 2 else h // 4
            cc = (3 * w // 4) if kw.quadrant % 2 else w // 4
        dr, dc = np.random.default_rng([seed, i]).integers(-jitter, jitter + 1, size=2) if jitter else (0, 0)
        r = int(np.clip(cr - size // 2 + dr, 0, h - 1))
        c = int(np.clip(cc - size // 2 + dc, 0, w - 1))
        objects.append(SceneObject(i, kw.class_id, (r, c), size, color))
    return Scene(kb.canvas, kb.background, tuple(objects))


def calibrate(decoded: Scene, kb: KnowledgeBase, profile: UserProfile | None, tolerance: int = 1) -> Scene:
    """Pull attributes that stray more than ``tolerance`` ladder steps from the prior.

    The replacement is the user's preference when one exists, else the
    prior.  Classes and positions are never touched.
    """
    prefs = profile.preferences if profile is not None else {}
    levels = kb.vocab.size_levels
    out = []
    for o in decoded.objects:
        prior_color, prior_size = kb.prior(o.class_id)
        want_color, want_size = prefs.get(o.class_id, (prior_color, prior_size))
        color, size = o.color, o.size
        if abs(color - prior_color) > tolerance:
            color = want_color
        if abs(levels.index(size) - levels.index(prior_size)) > tolerance:
            size = want_size
        out.append(SceneObject(o.id, o.class_id, o.position, size, color))
    return Scene(decoded.canvas, decoded.background, tuple(out))


# -- prompt wire format -------------------------------------------------------

END = "END"


def prompt_alphabet(kb: KnowledgeBase) -> list[str]:
    return (
        [END]
        + [f"g:{g}" for g in GOALS]
        + [f"c:{cid}" for cid in range(kb.vocab.n_classes)]
        + [f"q:{q}" for q in QUADRANTS]
        + ["q:-"]
    )


def prompt_tokens(prompt: Prompt) -> list[str]:
    """Wire tokens.  The vocabulary version is not sent; it travels in session signaling."""
    toks = [f"g:{GOALS[prompt.goal_token]}"]
    for kw in prompt.keyword_tokens:
        toks.append(f"c:{kw.class_id}")
        toks.append("q:-" if kw.quadrant is None else f"q:{QUADRANTS[kw.quadrant]}")
    toks.append(END)
    return toks


def parse_prompt(tokens: Sequence[str], k: int) -> Prompt:
    """Rebuild a prompt from possibly corrupted tokens.

    Unknown or out-of-place tokens are skipped and repeated classes dropped,
    so the result is always a well-formed prompt.
    """
    goal = 0
    keywords: list[Keyword] = []
    seen = set()
    pending: int | None = None
    for tok in tokens:
        if tok == END:
            break
        kind, _, val = tok.partition(":")
        if kind == "g" and val in GOALS:
            goal = GOALS.index(val)
        elif kind == "c" and val.isdigit():
            pending = int(val)
        elif kind == "q" and pending is not None:
            if pending not in seen and len(keywords) < k:
                keywords.append(Keyword(pending, None if val == "-" else QUADRANTS.index(val)))
                seen.add(pending)
            pending = None
    return Prompt(goal, tuple(keywords), k)


def prompt_frequencies(prompts: Iterable[Prompt], kb: KnowledgeBase) -> dict[str, int]:
    """Token counts over ``prompts`` with add-one smoothing over the whole alphabet."""
    freq = dict.fromkeys(prompt_alphabet(kb), 1)
    for p in prompts:
        for tok in prompt_tokens(p):
            freq[tok] += 1
    return freq
