import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaiscn.errors import ConfigurationError, DecodeError, EncodeError
from gaiscn.huffman import decode_prefix, entropy, huffman_build, huffman_decode, huffman_encode
from gaiscn.scene import serialize_scene
from gaiscn.traditional import TEXT_ALPHABET, text_frequencies


def optimal_weighted_length(freqs):
    """Brute force: minimise sum(n_i * l_i) over all length vectors obeying Kraft's inequality."""
    counts = list(freqs.values())
    best = None
    for lengths in itertools.product(range(1, len(counts)), repeat=len(counts)):
        if sum(2.0**-l for l in lengths) <= 1.0:
            cost = sum(n * l for n, l in zip(counts, lengths))
            best = cost if best is None else min(best, cost)
    return best


def test_equal_counts_give_length_two():
    cb = huffman_build({"a": 5, "b": 5, "c": 5, "d": 5})
    assert set(cb.lengths.values()) == {2}


def test_single_symbol():
    cb = huffman_build({"x": 9})
    assert cb.lengths == {"x": 1}
    frame = huffman_encode(["x"] * 4, cb)
    assert len(frame) == 4
    assert huffman_decode(frame, cb) == ["x"] * 4


def test_classic_table_matches_brute_force():
    freqs = {"a": 45, "b": 13, "c": 12, "d": 16, "e": 9, "f": 5}
    cb = huffman_build(freqs)
    oracle = optimal_weighted_length(freqs)
    assert oracle == 224
    assert sum(freqs[s] * n for s, n in cb.lengths.items()) == oracle
    assert cb.average_length(freqs) == pytest.approx(2.24)


def test_empty_table_rejected():
    with pytest.raises(ConfigurationError):
        huffman_build({})
    with pytest.raises(ConfigurationError):
        huffman_build({"a": 0})


def test_empty_stream():
    cb = huffman_build({"a": 1, "b": 2})
    frame = huffman_encode([], cb)
    assert len(frame) == 0
    assert huffman_decode(frame, cb) == []


def test_unknown_symbol_and_dangling_bits():
    cb = huffman_build({"a": 1, "b": 2, "c": 3})
    with pytest.raises(EncodeError):
        huffman_encode(["z"], cb)
    bits = huffman_encode(["a"], cb).bits
    assert len(bits) > 1
    with pytest.raises(DecodeError):
        huffman_decode(bits[:-1], cb)


def test_canonical_form_is_unique():
    freqs = {"a": 3, "b": 3, "c": 3, "d": 1, "e": 1}
    assert huffman_build(freqs).codes == huffman_build(dict(reversed(list(freqs.items())))).codes


frequency_tables = st.dictionaries(st.integers(0, 300), st.integers(1, 10_000), min_size=1, max_size=60)


@given(frequency_tables)
def test_prefix_free_and_entropy_bound(freqs):
    cb = huffman_build(freqs)
    assert cb.is_prefix_free()
    h = entropy(freqs)
    avg = cb.average_length(freqs)
    assert avg >= h - 1e-9
    assert avg < h + 1 or len(freqs) == 1


@given(frequency_tables, st.data())
def test_round_trip_and_length(freqs, data):
    cb = huffman_build(freqs)
    syms = data.draw(st.lists(st.sampled_from(sorted(freqs)), max_size=200))
    frame = huffman_encode(syms, cb)
    assert len(frame) == sum(len(cb.codes[s]) for s in syms)
    assert huffman_decode(frame, cb) == syms


def test_random_streams_round_trip(rng):
    freqs = {i: int(n) for i, n in enumerate(rng.integers(1, 500, size=40))}
    cb = huffman_build(freqs)
    for _ in range(100):
        syms = rng.integers(0, 40, size=rng.integers(0, 300)).tolist()
        frame = huffman_encode(syms, cb)
        assert len(frame) == sum(len(cb.codes[s]) for s in syms)
        assert huffman_decode(frame, cb) == syms


def test_corpus_serialization_round_trip(vocab, corpus):
    texts = [serialize_scene(s, vocab) for s in corpus]
    cb = huffman_build(text_frequencies(texts))
    for t in texts:
        assert "".join(huffman_decode(huffman_encode(t, cb), cb)) == t


def test_corpus_table_optimality_bound(vocab, corpus):
    texts = [serialize_scene(s, vocab) for s in corpus]
    freqs = text_frequencies(texts)
    cb = huffman_build(freqs)
    assert set(freqs) >= set(TEXT_ALPHABET)
    assert cb.average_length(freqs) <= entropy(freqs) + 1


def test_decode_prefix_stops():
    cb = huffman_build({"a": 5, "b": 3, "END": 1})
    bits = np.concatenate([huffman_encode(["a", "b", "END", "a"], cb).bits, [0, 0, 0]])
    syms, used = decode_prefix(bits, cb, stop="END")
    assert syms == ["a", "b", "END"]
    syms, _ = decode_prefix(bits, cb, max_symbols=2)
    assert syms == ["a", "b"]
    assert used == sum(len(cb.codes[s]) for s in ["a", "b", "END"])
    assert math.isfinite(entropy({"a": 1}))
