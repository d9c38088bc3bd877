import dataclasses

import numpy as np
import pytest

from gaiscn.channel import ChannelConfig
from gaiscn.errors import ConfigurationError
from gaiscn.knowledge import build_knowledge_base
from gaiscn.ldpc import coded_length
from gaiscn.scene import class_set, generate_scene, render
from gaiscn.semantic import frame_layout, select_profile
from gaiscn.traditional import encode_image
from gaiscn.workflow import (
    PROVISIONING,
    SYNC_UPDATE,
    ProtocolError,
    knowledge_sharing_bits,
    prepare_network,
    run_session,
    run_session_a,
    run_session_b,
    run_session_c,
    session_seed,
    share_knowledge,
    sync_update,
    update_global_knowledge,
)

QUIET = ChannelConfig(100.0, seed=0)


def noisy(i):
    return ChannelConfig(0.0, session_seed(2024, i, 0))


def test_prepare_single_user(vocab):
    net = prepare_network(1, vocab, seed=1)
    assert net.aligned and net.stage == PROVISIONING
    assert len({kb.version for kb in net.replicas}) == 1


def test_prepare_profiles(vocab):
    a = prepare_network(3, vocab, seed=5)
    b = prepare_network(3, vocab, seed=5)
    assert len({tuple(sorted(u.preferences.items())) for u in a.users}) == 3
    assert a.users == b.users
    assert a.replicas == b.replicas
    assert np.array_equal(a.code.parity_matrix, b.code.parity_matrix)
    assert a.codebooks == b.codebooks
    assert np.array_equal(a.table.vectors, b.table.vectors)
    with pytest.raises(ConfigurationError):
        prepare_network([], vocab, seed=5)


def test_session_requires_provisioning(net, corpus):
    with pytest.raises(ProtocolError):
        run_session_c(corpus[0], dataclasses.replace(net, stage=SYNC_UPDATE), QUIET)
    with pytest.raises(ConfigurationError):
        run_session("D", corpus[0], net, QUIET)


def test_scheme_c_noiseless(net, corpus):
    for i, s in enumerate(corpus[:40]):
        r = run_session_c(s, net, ChannelConfig(100.0, seed=i), user=i % 3)
        assert class_set(r.received_scene) == set(r.prompt.classes)
        assert not r.semantic_failure
        # accounting audit: the downlink carries exactly one semantic frame
        width = frame_layout(net.kb_edge, select_profile(100.0)).frame_width(len(r.sent_scene.objects))
        assert r.downlink_bits == width
        if len(s.objects) >= 2:
            assert r.uplink_bits < r.downlink_bits


def test_scheme_a_noiseless(net, corpus):
    for i, s in enumerate(corpus[:10]):
        r = run_session_a(s, net, ChannelConfig(100.0, seed=i))
        assert r.received_image == render(r.sent_scene, net.kb_cloud.vocab, net.settings.resolution)
        assert r.received_scene is None
        pixel_bits = len(encode_image(r.sent_image, net.codebooks.pixel))
        assert r.downlink_bits == coded_length(pixel_bits, net.code)
        assert 2 * pixel_bits <= r.downlink_bits < 2 * pixel_bits + net.code.n


def test_scheme_b_noiseless(net, corpus):
    for i, s in enumerate(corpus[:40]):
        r = run_session_b(s, net, ChannelConfig(100.0, seed=i))
        assert r.received_scene == s
        assert r.uplink_bits == r.downlink_bits


def test_a_costs_more_than_c_on_every_scene(net, corpus):
    for i, s in enumerate(corpus):
        a = run_session_a(s, net, noisy(i))
        c = run_session_c(s, net, noisy(i))
        assert a.downlink_bits > c.downlink_bits


def test_b_fails_at_least_as_often_as_c(net, corpus):
    fail_b = sum(run_session_b(s, net, noisy(i)).semantic_failure for i, s in enumerate(corpus))
    fail_c = sum(run_session_c(s, net, noisy(i)).semantic_failure for i, s in enumerate(corpus))
    assert fail_b >= fail_c


@pytest.mark.parametrize("scheme", ["A", "B", "C"])
def test_accounting_conservation(net, corpus, scheme):
    for i, s in enumerate(corpus[:30]):
        r = run_session(scheme, s, net, noisy(i))
        for direction, total in (("uplink", r.uplink_bits), ("downlink", r.downlink_bits), ("control", r.control_bits)):
            assert total == sum(n for d, _, n in r.hops if d == direction)
        last = r.events[-1]
        assert last["step"] == "session_result"
        assert last["bits"] == sum(n for _, _, n in r.hops)
        hop_events = sum(e["bits"] for e in r.events if "direction" in e)
        assert hop_events == last["bits"]


def test_share_knowledge_noop_and_propagation(net):
    assert share_knowledge(net) is net
    assert knowledge_sharing_bits(net) == 0
    v2 = build_knowledge_base(net.kb_cloud.vocab, net.settings.canvas, version=2)
    bumped = update_global_knowledge(net, v2)
    assert not bumped.aligned
    assert knowledge_sharing_bits(bumped) == 2 * 8 * len(v2.serialize())
    shared = share_knowledge(bumped)
    assert shared.aligned and {kb.version for kb in shared.replicas} == {2}


@pytest.mark.parametrize("scheme", ["A", "C"])
def test_mismatch_triggers_sharing_and_retry(net, corpus, scheme):
    v2 = build_knowledge_base(net.kb_cloud.vocab, net.settings.canvas, version=2)
    bumped = update_global_knowledge(net, v2)
    r = run_session(scheme, corpus[0], bumped, QUIET)
    assert r.knowledge_shared
    assert r.control_bits == knowledge_sharing_bits(bumped) > 0
    assert r.events[0]["step"] == "share_knowledge"
    # next session on the shared state needs no sharing
    again = run_session(scheme, corpus[1], share_knowledge(bumped), QUIET)
    assert not again.knowledge_shared and again.control_bits == 0


def test_sync_update_cache_and_flush(net, corpus):
    results = [run_session_c(s, net, noisy(i), user=i % 3, index=i) for i, s in enumerate(corpus[:10])]
    partial = sync_update(net, results[:4], sync_period=10)
    assert len(partial.feedback_cache) == 4 and partial.epoch == 0
    assert partial.stage == PROVISIONING
    flushed = sync_update(partial, results[4:], sync_period=10)
    assert flushed.feedback_cache == () and flushed.epoch == 1
    for uid in range(3):
        mine = [r for r in results if r.user_id == uid]
        best = max(mine, key=lambda r: r.feedback_score)
        expected = dict(net.users[uid].preferences)
        for o in sorted(best.received_scene.objects, key=lambda o: -o.id):
            expected[o.class_id] = (o.color, o.size)
        assert flushed.users[uid].preferences == expected
    with pytest.raises(ValueError):
        sync_update(net, [])


def test_sync_does_not_touch_results(net, corpus):
    results = [run_session_c(s, net, noisy(i)) for i, s in enumerate(corpus[:10])]
    before = [(r.received_scene, r.feedback_score, r.downlink_bits) for r in results]
    sync_update(net, results, sync_period=1)
    assert before == [(r.received_scene, r.feedback_score, r.downlink_bits) for r in results]


def test_session_deterministic(net, corpus):
    a = run_session_c(corpus[3], net, noisy(3))
    b = run_session_c(corpus[3], net, noisy(3))
    assert a.events == b.events
    assert a.received_scene == b.received_scene


def test_small_custom_scene(net, vocab):
    s = generate_scene(99, 2, vocab)
    r = run_session_c(s, net, QUIET)
    assert r.feedback_score >= 0
