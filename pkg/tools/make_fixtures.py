#!/usr/bin/env python3
"""Build bundled demo and benchmark fixtures.

Outputs (all deterministic, no randomness):
  data/fig1_surface_spec.json   worked-example surface spec; entity mentions
                                rendered as single typed placeholder tokens,
                                matching how the few-shot pipeline views spans
  data/fig1_path_spec.json      the same example's dependency-path variant
  data/episodes_5w1s.json       20 separable 5-way 1-shot episodes
  data/episodes_5w5s.json       20 separable 5-way 5-shot episodes
  data/background.json          background sentences for the baseline
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from ruleforge.corpus import (
    Span,
    SpecEntry,
    SpecMode,
    Specification,
    Token,
    AnnotatedSentence,
    linearize_path,
    load_corpus,
    save_specification,
    shortest_dep_path,
)
from ruleforge.evalkit import Episode, EpisodeSentence, episode_to_json

DATA = ROOT / "data"


def tok(word, tag, entity="o", lemma=None):
    return Token(word, lemma or word, tag, entity)


def fig1_fixtures() -> None:
    corpus = load_corpus(DATA / "micro_corpus.jsonl")
    fig1 = next(s for s in corpus if s.id == "fig1")

    # path variant: linearize the dependency path between the two mentions
    path = shortest_dep_path(fig1, 0, 9)
    linearized = linearize_path(fig1, path)
    path_spec = Specification(
        (SpecEntry(linearized, frozenset({Span(0, len(linearized))})),),
        SpecMode.SIMPLIFIED_SYNTAX,
    )
    save_specification(path_spec, DATA / "fig1_path_spec.json")

    # surface variant: placeholder tokens for the two person mentions, the
    # final period left outside the selection
    surface = AnnotatedSentence(
        "fig1-surface",
        (
            tok("person", "nnp", "person"),
            tok("was", "vbd", lemma="be"),
            tok("son", "nn"),
            tok("of", "in"),
            tok("david", "nnp"),
            tok("and", "cc"),
            tok("person", "nnp", "person"),
            tok(".", "."),
        ),
        ((2, 0, "nsubj"), (2, 1, "cop"), (4, 3, "case"), (2, 4, "nmod"), (4, 5, "cc"), (2, 6, "conj"), (2, 7, "punct")),
    )
    surface_spec = Specification((SpecEntry(surface, frozenset({Span(0, 7)})),))
    save_specification(surface_spec, DATA / "fig1_surface_spec.json")


# ---------------------------------------------------------------------------
# Few-shot episodes. Entity mentions are placeholder tokens carrying their
# type, so rules generalize across episodes the way collapsed spans do.
# Two relations share the person-organization pair and two share the
# person-location pair, which keeps the type-matching baseline guessing.
# ---------------------------------------------------------------------------

RELATIONS = {
    "rel:founded": ("person", "founded", "organization"),
    "rel:joined": ("person", "joined", "organization"),
    "rel:visited": ("person", "visited", "location"),
    "rel:entered": ("person", "entered", "location"),
    "rel:acquired": ("organization", "acquired", "organization"),
}

TAILS = [
    [("in", "in"), ("1999", "cd", "date"), (".", ".")],
    [("near", "in"), ("rivertown", "nnp", "location"), (".", ".")],
    [("last", "jj"), ("summer", "nn"), (".", ".")],
    [("again", "rb"), (".", ".")],
    [(".", ".")],
]

NO_REL_SHAPES = [
    ("location", "hosted", "organization"),
    ("person", "met", "person"),
    ("organization", "praised", "location"),
]


def episode_sentence(sid, shape, tail, gold):
    subj_type, verb, obj_type = shape
    rows = [tok(subj_type, "nnp", subj_type), tok(verb, "vbd"), tok(obj_type, "nnp", obj_type)]
    deps = [(1, 0, "nsubj"), (1, 2, "dobj")]
    for extra in tail:
        rows.append(tok(*extra))
    # attach tail tokens to the verb; shape details never matter downstream
    for i in range(3, len(rows)):
        deps.append((1, i, "dep"))
    sentence = AnnotatedSentence(sid, tuple(rows), tuple(deps))
    return EpisodeSentence(
        sentence=sentence,
        subj=Span(0, 1),
        subj_type=subj_type,
        obj=Span(2, 3),
        obj_type=obj_type,
        gold=gold,
    )


def build_episodes(shots: int, count: int = 20) -> list[Episode]:
    episodes = []
    labels = sorted(RELATIONS)
    for e in range(count):
        support = {}
        for li, label in enumerate(labels):
            shape = RELATIONS[label]
            sentences = tuple(
                episode_sentence(
                    f"e{e}-{label}-s{k}", shape, TAILS[(e + li + k) % len(TAILS)], label
                )
                for k in range(shots)
            )
            support[label] = sentences
        queries = []
        for qi, label in enumerate(labels):
            shape = RELATIONS[label]
            queries.append(
                episode_sentence(f"e{e}-q{qi}", shape, TAILS[(e + qi + 2) % len(TAILS)], label)
            )
        # one extra query for a type pair no support covers
        shape = NO_REL_SHAPES[e % len(NO_REL_SHAPES)]
        queries.append(episode_sentence(f"e{e}-qn", shape, TAILS[e % len(TAILS)], "no_relation"))
        episodes.append(
            Episode(way_count=len(labels), shot_count=shots, support=support, queries=tuple(queries))
        )
    return episodes


def build_background() -> list[EpisodeSentence]:
    shapes = [
        ("person", "advised", "organization"),
        ("person", "toured", "location"),
        ("organization", "sued", "organization"),
    ]
    out = []
    for i, shape in enumerate(shapes):
        out.append(episode_sentence(f"bg{i}", shape, TAILS[i % len(TAILS)], "no_relation"))
    return out


def dump(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, separators=(",", ":"))
        fh.write("\n")


def canonical_spec_fixture() -> None:
    """Two-entry spec whose exact bytes the browser UI must reproduce."""
    corpus = load_corpus(DATA / "micro_corpus.jsonl")
    index = {s.id: s for s in corpus}
    spec = Specification(
        (
            SpecEntry(index["fig1-surface"], frozenset({Span(0, 7)})),
            SpecEntry(index["m001"], frozenset({Span(2, 4)})),
        )
    )
    out = ROOT / "frontend" / "tests" / "fixtures" / "canonical_spec.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_specification(spec, out)


def main() -> None:
    fig1_fixtures()
    for shots, name in ((1, "episodes_5w1s.json"), (5, "episodes_5w5s.json")):
        episodes = build_episodes(shots)
        dump(DATA / name, {"episodes": [episode_to_json(ep) for ep in episodes]})
    from ruleforge.evalkit import episode_sentence_to_json

    dump(DATA / "background.json", {"sentences": [episode_sentence_to_json(s) for s in build_background()]})
    canonical_spec_fixture()
    print("fixtures written to", DATA)


if __name__ == "__main__":
    main()
