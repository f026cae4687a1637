from __future__ import annotations

import pytest

from fixtures import nli_bundle, topic_bundle


@pytest.fixture
def topic():
    return topic_bundle()


@pytest.fixture
def nli():
    return nli_bundle()


@pytest.fixture
def embedder():
    from xicl.similarity import HashEmbedder

    return HashEmbedder(dim=32, seed=0)
