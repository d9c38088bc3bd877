import hypothesis
import numpy as np
import pytest

from gaiscn.knowledge import build_knowledge_base
from gaiscn.scene import Vocabulary, generate_corpus
from gaiscn.workflow import prepare_network

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def vocab():
    return Vocabulary()


@pytest.fixture(scope="session")
def kb(vocab):
    return build_knowledge_base(vocab)


@pytest.fixture(scope="session")
def corpus(vocab):
    return generate_corpus(300, vocab, seed=2024)


@pytest.fixture(scope="session")
def net(vocab, corpus):
    return prepare_network(3, vocab, seed=2024, corpus=corpus)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
