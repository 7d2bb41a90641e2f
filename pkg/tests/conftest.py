from __future__ import annotations

import numpy as np
import pytest

from qnlp.corpus import default_lexicon, food_pool, it_pool
from qnlp.pregroup import Lexicon, parse_sentence


@pytest.fixture(scope="session")
def mc_lexicon() -> Lexicon:
    return default_lexicon()


@pytest.fixture(scope="session")
def toy_lexicon() -> Lexicon:
    return Lexicon.from_expressions(
        {
            "Alice": "n",
            "Bob": "n",
            "likes": "n.r@s@n.l",
            "old": "n@n.l",
        }
    )


@pytest.fixture(scope="session")
def corpus_sentences() -> list[tuple[str, ...]]:
    """Every distinct sentence the generator can emit, both topics."""
    return list(food_pool()) + list(it_pool())


@pytest.fixture(scope="session")
def corpus_diagrams(corpus_sentences, mc_lexicon):
    return [parse_sentence(list(ws), mc_lexicon) for ws in corpus_sentences]


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
