import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaiscn.metrics import (
    DEFAULT_BINS,
    EmbeddingTable,
    aggregate,
    aggregate_rows,
    bin_of,
    psnr,
    quantity_discrepancy,
    recovery_ratio,
    semantic_similarity,
)
from gaiscn.gai import calibrate
from gaiscn.scene import Image, Scene, SceneObject, generate_scene
from gaiscn.channel import ChannelConfig
from gaiscn.workflow import run_session_b, run_session_c


@pytest.fixture(scope="module")
def table():
    return EmbeddingTable.build(10, 16, seed=0)


def flat(v, shape=(8, 8)):
    return Image(np.full(shape, v, dtype=np.uint8))


def test_psnr_values():
    assert psnr(flat(7), flat(7)) == 100.0
    assert psnr(flat(10), flat(11)) == pytest.approx(20 * math.log10(255))
    assert psnr(flat(10), flat(11)) == pytest.approx(48.13, abs=0.005)
    assert psnr(flat(0), flat(255)) == 0.0
    with pytest.raises(ValueError):
        psnr(flat(0), flat(0, (4, 4)))


@given(st.integers(0, 2**31))
def test_psnr_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = (Image(rng.integers(0, 256, (6, 6), dtype=np.uint8)) for _ in range(2))
    assert psnr(a, b) == psnr(b, a)


def objs(*classes):
    return Scene(objects=tuple(SceneObject(i, c, (i, 0), 1, 0) for i, c in enumerate(classes)))


def test_similarity_identity_and_disjoint(table):
    s = objs(1, 2, 2)
    assert semantic_similarity(s, s, table) == pytest.approx(1.0)
    d = semantic_similarity(objs(0, 1, 2), objs(3, 4), table)
    assert abs(d) <= 0.3
    assert semantic_similarity(Scene(), Scene(), table) == 1.0
    assert semantic_similarity(Scene(), s, table) == 0.0


def test_similarity_symmetric_and_bounded(table, vocab):
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = generate_scene(int(rng.integers(2**31)), int(rng.integers(0, 9)), vocab)
        b = generate_scene(int(rng.integers(2**31)), int(rng.integers(0, 9)), vocab)
        ab = semantic_similarity(a, b, table)
        assert ab == semantic_similarity(b, a, table)
        assert -1.0 <= ab <= 1.0


def test_embedding_table_orthonormal(table):
    gram = table.vectors @ table.vectors.T
    assert np.allclose(gram, np.eye(10))
    big = EmbeddingTable.build(40, 16, seed=0)
    assert np.allclose(np.linalg.norm(big.vectors, axis=1), 1.0)


def test_recovery_and_quantity():
    bear, tree = 0, 7
    assert recovery_ratio(objs(bear, tree, tree), objs(bear, tree)) == pytest.approx(2 / 3)
    assert recovery_ratio(Scene(), objs(1)) == 1.0
    assert quantity_discrepancy(objs(1, 2, 3, 4, 5), objs(1, 2, 3)) == 2
    assert quantity_discrepancy(objs(1, 2), objs(1, 2)) == 0


def test_identities_on_corpus(corpus, table, vocab):
    for s in corpus:
        assert recovery_ratio(s, s) == 1.0
        assert quantity_discrepancy(s, s) == 0
        assert semantic_similarity(s, s, table) == pytest.approx(1.0)


def test_calibration_keeps_recovery(kb, corpus, rng):
    for s in corpus[:100]:
        wobbly = Scene(s.canvas, s.background, tuple(
            SceneObject(o.id, o.class_id, o.position, o.size, int(rng.integers(8))) for o in s.objects
        ))
        ref = generate_scene(int(rng.integers(2**31)), 4, kb.vocab)
        assert recovery_ratio(ref, wobbly) == recovery_ratio(ref, calibrate(wobbly, kb, None))


def test_bins():
    assert [bin_of(n, DEFAULT_BINS) for n in (0, 1, 2, 3, 6, 7, 30)] == [None, 0, 0, 1, 2, 3, 3]


def row(scheme, objects, **stats):
    base = {"scheme": scheme, "snr_db": 0.0, "objects": objects, "semantic_failure": False, "control_bits": 0}
    base.update({k: None for k in ("psnr_db", "similarity", "recovery_ratio", "quantity_discrepancy", "downlink_bits", "uplink_bits")})
    base.update(stats)
    return base


def test_aggregate_means():
    one = aggregate_rows([row("C", 1, downlink_bits=100)])
    assert one.mean("C", "downlink_bits") == 100
    two = aggregate_rows([row("C", 1, downlink_bits=100, recovery_ratio=1.0), row("C", 5, downlink_bits=151, recovery_ratio=0.5)])
    assert two.mean("C", "downlink_bits") == 125.5
    assert two.curve("C", "recovery_ratio") == [1.0, None, 0.5, None]
    assert len(two.curves[("C", 0.0)]) == len(DEFAULT_BINS)
    with pytest.raises(ValueError):
        aggregate_rows([])


def test_aggregate_from_results(net, corpus, table):
    results = [run_session_c(s, net, ChannelConfig(100.0, seed=i)) for i, s in enumerate(corpus[:8])]
    results += [run_session_b(s, net, ChannelConfig(100.0, seed=i)) for i, s in enumerate(corpus[:8])]
    report = aggregate(results, table)
    assert report.mean("B", "recovery_ratio") == 1.0
    assert report.mean("B", "psnr_db") == 100.0
    assert report.groups[("C", 100.0)]["sessions"] == 8
    lines = report.table_csv().splitlines()
    assert lines[0].startswith("scheme,snr_db,sessions")
    assert len(lines) == 3
    assert report.curves_jsonl().count("\n") == 2 * len(DEFAULT_BINS)
    with pytest.raises(ValueError):
        aggregate([], table)
