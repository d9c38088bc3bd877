"""Protocol engine: node replicas, the three-stage lifecycle and the three schemes.

Stages: Preparation (build knowledge replicas, branch profiles, codes) ->
Provisioning (sessions) -> SyncUpdate (feedback flushed from edge to cloud)
-> back to Provisioning.

Scheme C  prompt uplink (traditional stack) -> cloud regeneration -> semantic downlink -> calibration
Scheme A  prompt uplink -> cloud regeneration -> pixel downlink over the traditional stack
Scheme B  semantic uplink of the original scene -> semantic downlink, no generation
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channel import BitLedger, ChannelConfig
from .errors import ConfigurationError, KnowledgeMismatchError
from .gai import Prompt, calibrate, extract_keywords, generate_content, identify_goal
from .knowledge import KnowledgeBase, UserProfile, build_knowledge_base, seeded_profile
from .ldpc import LdpcCode, make_ldpc_code
from .metrics import EmbeddingTable, semantic_similarity
from .scene import DEFAULT_CANVAS, DEFAULT_RESOLUTION, Image, Scene, Vocabulary, generate_corpus, render
from .semantic import ROBUST, STANDARD, ProtectionProfile, jscc_session, select_profile
from .traditional import (
    SourceCodebooks,
    build_codebooks,
    decode_image,
    decode_prompt,
    encode_image,
    encode_prompt,
    send_coded,
)

PREPARATION, PROVISIONING, SYNC_UPDATE = "Preparation", "Provisioning", "SyncUpdate"

# hop identifiers; equal ids across schemes give paired noise
HOP_UPLINK, HOP_DOWNLINK = 1, 2


class ProtocolError(RuntimeError):
    """A session was attempted in the wrong lifecycle stage."""


@dataclass(frozen=True)
class NetworkSettings:
    canvas: tuple[int, int] = DEFAULT_CANVAS
    resolution: tuple[int, int] = DEFAULT_RESOLUTION
    k: int = 3
    service_kind: str = "image-delivery"
    jitter: int = 2
    calibration_tolerance: int = 1
    sync_period: int = 10
    history_capacity: int = 16
    preference_fraction: float = 0.3
    robust_below_db: float = 6.0
    standard_profile: ProtectionProfile = STANDARD
    robust_profile: ProtectionProfile = ROBUST
    uplink_max_attempts: int = 64
    payload_max_attempts: int = 1
    ldpc_n: int = 96
    ldpc_k: int = 48
    ldpc_seed: int = 1
    ldpc_max_iterations: int = 50
    embedding_dim: int = 16
    embedding_seed: int = 0
    codebook_corpus_size: int = 64


@dataclass(frozen=True)
class FeedbackEntry:
    user_id: int
    score: float
    attributes: tuple[tuple[int, int, int], ...]  # (class_id, color, size) of the delivered scene


@dataclass(frozen=True, eq=False)
class NetworkState:
    settings: NetworkSettings
    users: tuple[UserProfile, ...]
    kb_cloud: KnowledgeBase
    kb_edge: KnowledgeBase
    kb_td: KnowledgeBase
    code: LdpcCode
    codebooks: SourceCodebooks
    table: EmbeddingTable
    stage: str = PREPARATION
    feedback_cache: tuple[FeedbackEntry, ...] = ()
    epoch: int = 0
    sessions_since_sync: int = 0

    @property
    def replicas(self) -> tuple[KnowledgeBase, KnowledgeBase, KnowledgeBase]:
        return (self.kb_cloud, self.kb_edge, self.kb_td)

    @property
    def aligned(self) -> bool:
        return len({kb.version for kb in self.replicas}) == 1

    def profile(self, user_id: int) -> UserProfile:
        return self.users[user_id]


@dataclass(eq=False)
class SessionResult:
    scheme_tag: str
    session_index: int
    user_id: int
    snr_db: float
    uplink_bits: int
    downlink_bits: int
    control_bits: int
    original_scene: Scene
    sent_scene: Scene  # what the downlink carried
    received_scene: Scene | None  # None where no semantic layer exists (scheme A)
    sent_image: Image
    received_image: Image
    semantic_failure: bool
    feedback_score: float
    downlink_bit_errors: int = 0
    downlink_exact: bool = False  # downlink decoder output identical to its input, before calibration
    prompt: Prompt | None = None
    knowledge_shared: bool = False
    hops: list = field(default_factory=list)  # (direction, purpose, bits)
    events: list = field(default_factory=list)


def hop_seed(session_seed: int, hop: int) -> int:
    return int(np.random.SeedSequence([session_seed, hop]).generate_state(1, dtype=np.uint64)[0])


def session_seed(master_seed: int, *index: int) -> int:
    return int(np.random.SeedSequence([master_seed, *index]).generate_state(1, dtype=np.uint64)[0])


def prepare_network(
    users: Sequence[int] | int,
    vocab: Vocabulary,
    seed: int,
    corpus: Sequence[Scene] | None = None,
    settings: NetworkSettings | None = None,
) -> NetworkState:
    """Initial Network Preparation.

    Builds identical knowledge replicas, one seeded branch profile per user,
    the LDPC code, the embedding table and the shared source codebooks
    (trained on ``corpus``, or on a seeded stand-in corpus when omitted).
    """
    settings = settings or NetworkSettings()
    user_ids = list(range(users)) if isinstance(users, int) else list(users)
    if not user_ids:
        raise ConfigurationError("at least one user is required")
    if user_ids != list(range(len(user_ids))):
        raise ConfigurationError("user ids must be 0..n-1")
    kb = build_knowledge_base(vocab, settings.canvas)
    profiles = tuple(
        seeded_profile(u, vocab, seed, settings.preference_fraction, settings.history_capacity) for u in user_ids
    )
    if corpus is None:
        corpus = generate_corpus(settings.codebook_corpus_size, vocab, seed, canvas=settings.canvas)
    goal = identify_goal(settings.service_kind)
    prompts = [extract_keywords(s, None, settings.k, goal) for s in corpus]
    return NetworkState(
        settings=settings,
        users=profiles,
        kb_cloud=kb,
        kb_edge=kb,
        kb_td=kb,
        code=make_ldpc_code(
            settings.ldpc_n, settings.ldpc_k, seed=settings.ldpc_seed, max_iterations=settings.ldpc_max_iterations
        ),
        codebooks=build_codebooks(corpus, kb, prompts, settings.resolution),
        table=EmbeddingTable.build(vocab.n_classes, settings.embedding_dim, settings.embedding_seed),
        stage=PROVISIONING,
    )


def update_global_knowledge(net: NetworkState, kb: KnowledgeBase) -> NetworkState:
    """Install a new knowledge version in the cloud only; other replicas lag until shared."""
    return replace(net, kb_cloud=kb)


def knowledge_sharing_bits(net: NetworkState) -> int:
    """Control-plane cost of bringing every replica up to the newest version."""
    newest = max(net.replicas, key=lambda kb: kb.version)
    return sum(8 * len(newest.serialize()) for kb in net.replicas if kb.version != newest.version)


def share_knowledge(net: NetworkState) -> NetworkState:
    newest = max(net.replicas, key=lambda kb: kb.version)
    if net.aligned:
        return net
    return replace(net, kb_cloud=newest, kb_edge=newest, kb_td=newest)


def _require_provisioning(net: NetworkState) -> None:
    if net.stage != PROVISIONING:
        raise ProtocolError(f"sessions need the {PROVISIONING} stage, network is in {net.stage}")


class _Session:
    """Mutable scratch state of one session: ledger and event log."""

    def __init__(self, scheme: str, index: int, user: int, cfg: ChannelConfig):
        self.scheme = scheme
        self.index = index
        self.user = user
        self.cfg = cfg
        self.ledger = BitLedger()
        self.events: list[dict] = []

    def event(self, step: str, direction: str | None = None, bits: int = 0, **extra) -> None:
        rec = {"session": self.index, "scheme": self.scheme, "snr_db": self.cfg.snr_db, "user": self.user, "step": step}
        if direction is not None:
            rec["direction"] = direction
        rec["bits"] = int(bits)
        rec.update(extra)
        self.events.append(rec)

    def hop_cfg(self, hop: int) -> ChannelConfig:
        return ChannelConfig(self.cfg.snr_db, hop_seed(self.cfg.seed, hop))


def _prompt_loop(s: _Session, scene: Scene, net: NetworkState) -> tuple[Prompt, Scene]:
    """Steps shared by schemes A and C: extract, uplink the prompt, regenerate in the cloud."""
    st = net.settings
    profile = net.profile(s.user)
    prompt = extract_keywords(scene, profile, st.k, identify_goal(st.service_kind), version=net.kb_td.version)
    s.event("extract_keywords", classes=prompt.classes)

    payload = encode_prompt(prompt, net.codebooks.prompt, direction="uplink", scheme_tag=s.scheme, purpose="prompt")
    before = s.ledger.total("uplink")
    rng = np.random.default_rng(s.hop_cfg(HOP_UPLINK).seed)
    bits, attempts = send_coded(payload, net.code, s.cfg.snr_db, rng, s.ledger, st.uplink_max_attempts)
    received = decode_prompt(bits[: len(payload)], net.codebooks.prompt, st.k)
    # the sender's knowledge version travels in session signaling, not in the prompt payload
    received = replace(received, version=prompt.version)
    s.event(
        "uplink_prompt",
        "uplink",
        s.ledger.total("uplink") - before,
        payload_bits=len(payload),
        attempts=attempts,
        prompt_intact=received.keyword_tokens == prompt.keyword_tokens,
    )

    generated = generate_content(received, profile, net.kb_cloud, s.cfg.seed, st.jitter)
    s.event("generate_content", objects=len(generated.objects))
    return prompt, generated


def _with_knowledge_retry(body, scheme: str, scene: Scene, net: NetworkState, cfg: ChannelConfig, user: int, index: int):
    s = _Session(scheme, index, user, cfg)
    try:
        return body(s, scene, net, cfg)
    except KnowledgeMismatchError as err:
        cost = knowledge_sharing_bits(net)
        if net.aligned:
            raise
        shared = share_knowledge(net)
        s = _Session(scheme, index, user, cfg)
        s.ledger.add("control", "knowledge_sharing", cost)
        s.event("share_knowledge", "control", cost, reason=str(err), version=shared.kb_td.version)
        result = body(s, scene, shared, cfg)
        result.knowledge_shared = True
        return result


def _finish(s: _Session, **fields) -> SessionResult:
    res = SessionResult(
        scheme_tag=s.scheme,
        session_index=s.index,
        user_id=s.user,
        snr_db=s.cfg.snr_db,
        uplink_bits=s.ledger.total("uplink"),
        downlink_bits=s.ledger.total("downlink"),
        control_bits=s.ledger.total("control"),
        hops=list(s.ledger.hops),
        events=s.events,
        **fields,
    )
    s.event(
        "session_result",
        bits=res.uplink_bits + res.downlink_bits + res.control_bits,
        uplink_bits=res.uplink_bits,
        downlink_bits=res.downlink_bits,
        control_bits=res.control_bits,
        semantic_failure=res.semantic_failure,
    )
    return res


def _score(original: Scene, delivered: Scene, net: NetworkState) -> float:
    return max(0.0, semantic_similarity(original, delivered, net.table))


def _session_c(s: _Session, scene: Scene, net: NetworkState, cfg: ChannelConfig) -> SessionResult:
    st = net.settings
    prompt, generated = _prompt_loop(s, scene, net)

    profile = select_profile(cfg.snr_db, st.robust_below_db, st.standard_profile, st.robust_profile)
    s.event("select_encoder", protection=[profile.header, profile.class_, profile.attribute])

    down = jscc_session(
        generated, net.kb_edge, s.hop_cfg(HOP_DOWNLINK), rx_kb=net.kb_td, profile=profile, scheme_tag="C"
    )
    s.ledger.record(down.frame)
    s.event("downlink_semantic", "downlink", down.bits, bit_errors=down.bit_errors, semantic_failure=down.semantic_failure)

    calibrated = calibrate(down.scene, net.kb_td, net.profile(s.user), st.calibration_tolerance)
    s.event("calibrate", changed=calibrated != down.scene)
    return _finish(
        s,
        original_scene=scene,
        sent_scene=generated,
        received_scene=calibrated,
        sent_image=render(generated, net.kb_edge.vocab, st.resolution),
        received_image=render(calibrated, net.kb_td.vocab, st.resolution),
        semantic_failure=down.semantic_failure,
        feedback_score=_score(scene, calibrated, net),
        downlink_bit_errors=down.bit_errors,
        downlink_exact=down.scene == generated,
        prompt=prompt,
    )


def _session_a(s: _Session, scene: Scene, net: NetworkState, cfg: ChannelConfig) -> SessionResult:
    st = net.settings
    prompt, generated = _prompt_loop(s, scene, net)
    image = render(generated, net.kb_cloud.vocab, st.resolution)
    payload = encode_image(image, net.codebooks.pixel, direction="downlink", scheme_tag="A", purpose="pixels")
    rng = np.random.default_rng(s.hop_cfg(HOP_DOWNLINK).seed)
    bits, attempts = send_coded(payload, net.code, cfg.snr_db, rng, s.ledger, st.payload_max_attempts)
    received = decode_image(bits, net.codebooks.pixel, st.resolution)
    n_err = int(np.count_nonzero(bits[: len(payload)] != payload.bits))
    s.event(
        "downlink_pixels",
        "downlink",
        s.ledger.total("downlink"),
        payload_bits=len(payload),
        attempts=attempts,
        residual_bit_errors=n_err,
    )
    return _finish(
        s,
        original_scene=scene,
        sent_scene=generated,
        received_scene=None,
        sent_image=image,
        received_image=received,
        semantic_failure=False,
        feedback_score=_score(scene, generated, net),
        downlink_bit_errors=n_err,
        downlink_exact=received == image,
        prompt=prompt,
    )


def _session_b(s: _Session, scene: Scene, net: NetworkState, cfg: ChannelConfig) -> SessionResult:
    st = net.settings
    profile = select_profile(cfg.snr_db, st.robust_below_db, st.standard_profile, st.robust_profile)
    up = jscc_session(
        scene, net.kb_td, s.hop_cfg(HOP_UPLINK), rx_kb=net.kb_edge, profile=profile, direction="uplink", scheme_tag="B"
    )
    s.ledger.record(up.frame)
    s.event("uplink_semantic", "uplink", up.bits, bit_errors=up.bit_errors, semantic_failure=up.semantic_failure)
    down = jscc_session(
        up.scene, net.kb_edge, s.hop_cfg(HOP_DOWNLINK), rx_kb=net.kb_td, profile=profile, scheme_tag="B"
    )
    s.ledger.record(down.frame)
    s.event("downlink_semantic", "downlink", down.bits, bit_errors=down.bit_errors, semantic_failure=down.semantic_failure)
    return _finish(
        s,
        original_scene=scene,
        sent_scene=scene,
        received_scene=down.scene,
        sent_image=render(scene, net.kb_td.vocab, st.resolution),
        received_image=render(down.scene, net.kb_td.vocab, st.resolution),
        semantic_failure=up.semantic_failure or down.semantic_failure,
        feedback_score=_score(scene, down.scene, net),
        downlink_bit_errors=down.bit_errors,
        downlink_exact=down.scene == up.scene,
    )


_SCHEMES = {"A": _session_a, "B": _session_b, "C": _session_c}


def run_session(scheme: str, scene: Scene, net: NetworkState, cfg: ChannelConfig, user: int = 0, index: int = 0) -> SessionResult:
    _require_provisioning(net)
    try:
        body = _SCHEMES[scheme]
    except KeyError:
        raise ConfigurationError(f"unknown scheme {scheme!r}") from None
    return _with_knowledge_retry(body, scheme, scene, net, cfg, user, index)


def run_session_a(scene, net, cfg, user=0, index=0) -> SessionResult:
    return run_session("A", scene, net, cfg, user, index)


def run_session_b(scene, net, cfg, user=0, index=0) -> SessionResult:
    return run_session("B", scene, net, cfg, user, index)


def run_session_c(scene, net, cfg, user=0, index=0) -> SessionResult:
    return run_session("C", scene, net, cfg, user, index)


def _best_attributes(entries: Sequence[FeedbackEntry]) -> dict[int, tuple[int, int]]:
    best = max(entries, key=lambda e: e.score)  # max() keeps the earliest on ties
    prefs: dict[int, tuple[int, int]] = {}
    for cid, color, size in best.attributes:
        prefs.setdefault(cid, (color, size))
    return prefs


def sync_update(net: NetworkState, results: Sequence[SessionResult], sync_period: int | None = None) -> NetworkState:
    """Model Synchronization and Update.

    Feedback from ``results`` is cached at the edge.  Once ``sync_period``
    sessions have accumulated the cache is flushed: each user's preferences
    are set to the attributes delivered in that user's best-scoring cached
    session, the epoch advances and the knowledge replicas are re-aligned.
    """
    if not results:
        raise ValueError("sync_update needs at least one session result")
    period = sync_period or net.settings.sync_period
    users = list(net.users)
    cache = list(net.feedback_cache)
    for r in results:
        delivered = r.received_scene if r.received_scene is not None else r.sent_scene
        attrs = tuple((o.class_id, o.color, o.size) for o in sorted(delivered.objects, key=lambda o: o.id))
        cache.append(FeedbackEntry(r.user_id, r.feedback_score, attrs))
        u = users[r.user_id].with_feedback(r.feedback_score)
        users[r.user_id] = u.remember(r.prompt) if r.prompt is not None else u
    net = replace(net, stage=SYNC_UPDATE, users=tuple(users), feedback_cache=tuple(cache),
                  sessions_since_sync=net.sessions_since_sync + len(results))
    if net.sessions_since_sync >= period:
        for uid in sorted({e.user_id for e in cache}):
            mine = [e for e in cache if e.user_id == uid]
            users[uid] = users[uid].with_preferences(_best_attributes(mine))
        net = share_knowledge(replace(net, users=tuple(users), feedback_cache=(), sessions_since_sync=0, epoch=net.epoch + 1))
    return replace(net, stage=PROVISIONING)
