import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ruleforge.corpus import (
    AnnotatedSentence,
    Span,
    SpecEntry,
    SpecMode,
    Specification,
    Token,
    load_corpus,
)

REPO = Path(__file__).resolve().parents[1]
DATA = REPO / "data"


def make_sentence(sid, rows, deps=()):
    """rows: list of (word, lemma, tag[, entity]) tuples."""
    tokens = tuple(Token(*row) for row in rows)
    return AnnotatedSentence(sid, tokens, tuple(deps))


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def micro_corpus():
    return load_corpus(DATA / "micro_corpus.jsonl")


@pytest.fixture(scope="session")
def fig1_sentence():
    rows = [
        ("he", "he", "prp", "person"),
        ("was", "be", "vbd", "o"),
        ("a", "a", "dt", "o"),
        ("son", "son", "nn", "o"),
        ("of", "of", "in", "o"),
        ("david", "david", "nnp", "person"),
        ("and", "and", "cc", "o"),
        ("mary", "mary", "nnp", "person"),
        ("m", "m", "nnp", "person"),
        ("anderson", "anderson", "nnp", "person"),
        (".", ".", ".", "o"),
    ]
    deps = [
        (3, 0, "nsubj"),
        (3, 1, "cop"),
        (3, 2, "det"),
        (3, 5, "nmod"),
        (5, 4, "case"),
        (5, 6, "cc"),
        (3, 9, "conj"),
        (9, 7, "compound"),
        (9, 8, "compound"),
        (3, 10, "punct"),
    ]
    return make_sentence("fig1", rows, deps)


@pytest.fixture(scope="session")
def fig1_path_sentence():
    rows = [("he", "he", "prp", "person"), ("son", "son", "nn", "o"), ("anderson", "anderson", "nnp", "person")]
    return make_sentence("fig1#path", rows)


@pytest.fixture(scope="session")
def fig1_path_spec(fig1_path_sentence):
    entry = SpecEntry(fig1_path_sentence, frozenset({Span(0, 3)}))
    return Specification((entry,), SpecMode.SIMPLIFIED_SYNTAX)
