"""Background knowledge and per-user branch profiles."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .scene import DEFAULT_CANVAS, Vocabulary, class_prototypes


@dataclass(frozen=True)
class KnowledgeBase:
    """Shared vocabulary plus per-class attribute priors.

    Canvas geometry and background are part of the shared knowledge: the
    semantic frame does not carry them.
    """

    vocab: Vocabulary
    attribute_priors: tuple[tuple[int, int], ...]  # class_id -> (color index, size level)
    version: int = 1
    canvas: tuple[int, int] = DEFAULT_CANVAS
    background: int = 0

    def __post_init__(self):
        object.__setattr__(self, "attribute_priors", tuple(tuple(p) for p in self.attribute_priors))
        object.__setattr__(self, "canvas", tuple(self.canvas))
        if len(self.attribute_priors) != self.vocab.n_classes:
            raise ValueError("need one attribute prior per class")
        for color, size in self.attribute_priors:
            if not 0 <= color < self.vocab.n_colors or size not in self.vocab.size_levels:
                raise ValueError(f"prior ({color}, {size}) outside vocabulary domains")

    def prior(self, class_id: int) -> tuple[int, int]:
        return self.attribute_priors[class_id]

    def serialize(self) -> str:
        priors = " ".join(f"{c}:{s}" for c, s in self.attribute_priors)
        h, w = self.canvas
        return f"kb {self.version} canvas {h} {w} bg {self.background}\n{self.vocab.serialize()}priors {priors}\n"


def build_knowledge_base(vocab: Vocabulary, canvas=DEFAULT_CANVAS, version: int | None = None) -> KnowledgeBase:
    return KnowledgeBase(vocab, tuple(class_prototypes(vocab)), version or vocab.version, canvas)


@dataclass(frozen=True)
class UserProfile:
    """Per-user branch model: attribute preferences, prompt history, feedback."""

    user_id: int
    preferences: Mapping[int, tuple[int, int]] = field(default_factory=dict)
    history: tuple = ()
    history_capacity: int = 16
    feedback_scores: tuple[float, ...] = ()

    def remember(self, prompt) -> "UserProfile":
        hist = (self.history + (prompt,))[-self.history_capacity :] if self.history_capacity else ()
        return replace(self, history=hist)

    def with_preferences(self, updates: Mapping[int, tuple[int, int]]) -> "UserProfile":
        prefs = dict(self.preferences)
        prefs.update(updates)
        return replace(self, preferences=dict(sorted(prefs.items())))

    def with_feedback(self, score: float) -> "UserProfile":
        return replace(self, feedback_scores=self.feedback_scores + (float(score),))


def seeded_profile(
    user_id: int,
    vocab: Vocabulary,
    seed: int,
    preference_fraction: float = 0.3,
    history_capacity: int = 16,
) -> UserProfile:
    """Profile with preferences for a seeded random subset of classes."""
    rng = np.random.default_rng([seed, user_id])
    prefs = {}
    for cid in range(vocab.n_classes):
        if rng.random() < preference_fraction:
            prefs[cid] = (int(rng.integers(vocab.n_colors)), vocab.size_levels[int(rng.integers(vocab.n_sizes))])
    return UserProfile(user_id, prefs, history_capacity=history_capacity)
