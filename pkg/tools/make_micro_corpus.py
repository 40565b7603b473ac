#!/usr/bin/env python3
"""Build the bundled micro corpus (data/micro_corpus.jsonl).

Deterministic template expansion over a small vocabulary: no randomness, so
regenerating the file is always byte-identical. Sentences come with simple
verb-rooted dependency trees and entity labels; shapes deliberately share
local contexts (same determiner+noun with different verbs, optional
adjectives, doubled adjectives) so the data generator can find alternation
and quantifier witnesses.
"""
from __future__ import annotations

import sys
from itertools import product
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ruleforge.corpus import AnnotatedSentence, Token, save_corpus

ANIMALS = [("dog", "dog"), ("cat", "cat"), ("bird", "bird"), ("horse", "horse"), ("fox", "fox")]
PLURALS = [("dogs", "dog"), ("cats", "cat"), ("birds", "bird")]
V_PAST = [("barked", "bark"), ("ran", "run"), ("jumped", "jump"), ("slept", "sleep"), ("walked", "walk")]
V_BASE = [("bark", "bark"), ("run", "run"), ("sleep", "sleep")]
V_TRANS = [("chased", "chase"), ("watched", "watch"), ("followed", "follow")]
ADJS = ["big", "old", "small", "quick", "lazy"]
ADVS = ["quickly", "loudly", "slowly"]
DETS = ["the", "a"]
PLACES = [("garden", "garden"), ("river", "river"), ("barn", "barn")]
PREPS = ["in", "near", "over"]
PERSONS = ["alice", "bob", "carol", "david", "emma", "frank"]
SURNAMES = ["anderson", "baker", "carter"]
ORGS = ["acme", "globex", "initech", "umbrella"]
CITIES = ["springfield", "rivertown", "lakeside"]
YEARS = ["1999", "2001", "2010"]
KIN = [("son", "son"), ("daughter", "daughter"), ("founder", "founder"), ("director", "director")]
PV = [("founded", "found"), ("joined", "join"), ("left", "leave")]


def tok(word, lemma, tag, entity="o"):
    return Token(word, lemma, tag, entity)


def sent(sid, tokens, deps):
    return AnnotatedSentence(sid, tuple(tokens), tuple(deps))


def punct(tokens, deps, root):
    tokens.append(tok(".", ".", "."))
    deps.append((root, len(tokens) - 1, "punct"))
    return tokens, deps


def main() -> None:
    sentences = []
    n = 0

    def add(tokens, deps):
        nonlocal n
        n += 1
        sentences.append(sent(f"m{n:03d}", tokens, deps))

    # "the dog barked ." with optional adjective and adverb
    for i, ((noun, nlem), (verb, vlem)) in enumerate(product(ANIMALS, V_PAST)):
        if (i % 7) in (3, 6):
            continue  # thin the grid a little
        det = DETS[i % 2]
        use_adj = i % 3 == 0
        use_adv = i % 4 == 0
        tokens = [tok(det, det, "dt")]
        deps = []
        if use_adj:
            tokens.append(tok(ADJS[i % len(ADJS)], ADJS[i % len(ADJS)], "jj"))
        noun_i = len(tokens)
        tokens.append(tok(noun, nlem, "nn"))
        verb_i = len(tokens)
        tokens.append(tok(verb, vlem, "vbd"))
        deps += [(noun_i, 0, "det"), (verb_i, noun_i, "nsubj")]
        if use_adj:
            deps.append((noun_i, 1, "amod"))
        if use_adv:
            adv = ADVS[i % len(ADVS)]
            tokens.append(tok(adv, adv, "rb"))
            deps.append((verb_i, len(tokens) - 1, "advmod"))
        add(*punct(tokens, deps, verb_i))

    # bare and determined plurals: "dogs bark ." / "the dogs bark ."
    for i, ((noun, nlem), (verb, vlem)) in enumerate(product(PLURALS, V_BASE)):
        tokens = [tok(noun, nlem, "nns"), tok(verb, vlem, "vbp")]
        add(*punct(tokens, [(1, 0, "nsubj")], 1))
        if i % 2 == 0:
            tokens = [tok("the", "the", "dt"), tok(noun, nlem, "nns"), tok(verb, vlem, "vbp")]
            add(*punct(tokens, [(1, 0, "det"), (2, 1, "nsubj")], 2))

    # doubled adjectives: "the big big dog jumped ."
    for i, (noun, nlem) in enumerate(ANIMALS):
        adj = ADJS[i % len(ADJS)]
        verb, vlem = V_PAST[i % len(V_PAST)]
        tokens = [tok("the", "the", "dt"), tok(adj, adj, "jj"), tok(adj, adj, "jj"),
                  tok(noun, nlem, "nn"), tok(verb, vlem, "vbd")]
        deps = [(3, 0, "det"), (3, 1, "amod"), (3, 2, "amod"), (4, 3, "nsubj")]
        add(*punct(tokens, deps, 4))

    # transitive: "the dog chased the cat ."
    for i, ((subj, slem), (verb, vlem), (obj, olem)) in enumerate(
        product(ANIMALS[:3], V_TRANS, ANIMALS[2:])
    ):
        if i % 2:
            continue
        tokens = [tok("the", "the", "dt"), tok(subj, slem, "nn"), tok(verb, vlem, "vbd"),
                  tok("the", "the", "dt"), tok(obj, olem, "nn")]
        deps = [(1, 0, "det"), (2, 1, "nsubj"), (4, 3, "det"), (2, 4, "dobj")]
        add(*punct(tokens, deps, 2))

    # prepositional: "the dog slept near the river ."
    for i, ((noun, nlem), prep, (place, plem)) in enumerate(product(ANIMALS, PREPS, PLACES)):
        if i % 4:
            continue
        verb, vlem = V_PAST[(i // 4) % len(V_PAST)]
        tokens = [tok("the", "the", "dt"), tok(noun, nlem, "nn"), tok(verb, vlem, "vbd"),
                  tok(prep, prep, "in"), tok("the", "the", "dt"), tok(place, plem, "nn")]
        deps = [(1, 0, "det"), (2, 1, "nsubj"), (5, 3, "case"), (5, 4, "det"), (2, 5, "nmod")]
        add(*punct(tokens, deps, 2))

    # "alice founded acme in 2001 ." with optional year phrase
    for i, (person, (verb, vlem), org) in enumerate(product(PERSONS, PV, ORGS)):
        if i % 3:
            continue
        tokens = [tok(person, person, "nnp", "person"), tok(verb, vlem, "vbd"),
                  tok(org, org, "nnp", "organization")]
        deps = [(1, 0, "nsubj"), (1, 2, "dobj")]
        if i % 2 == 0:
            year = YEARS[i % len(YEARS)]
            tokens += [tok("in", "in", "in"), tok(year, year, "cd", "date")]
            deps += [(4, 3, "case"), (1, 4, "nmod")]
        add(*punct(tokens, deps, 1))

    # kinship and roles: "alice was a daughter of carol ."
    for i, (person, (kin, klem), other) in enumerate(product(PERSONS[:4], KIN, PERSONS[2:])):
        if i % 4:
            continue
        tokens = [tok(person, person, "nnp", "person"), tok("was", "be", "vbd"),
                  tok("a", "a", "dt"), tok(kin, klem, "nn"), tok("of", "of", "in"),
                  tok(other, other, "nnp", "person")]
        deps = [(3, 0, "nsubj"), (3, 1, "cop"), (3, 2, "det"), (5, 4, "case"), (3, 5, "nmod")]
        add(*punct(tokens, deps, 3))

    # full names: "alice anderson joined acme ."
    for i, (first, last, org) in enumerate(product(PERSONS[:3], SURNAMES, ORGS[:2])):
        if i % 2:
            continue
        tokens = [tok(first, first, "nnp", "person"), tok(last, last, "nnp", "person"),
                  tok("joined", "join", "vbd"), tok(org, org, "nnp", "organization")]
        deps = [(1, 0, "compound"), (2, 1, "nsubj"), (2, 3, "dobj")]
        add(*punct(tokens, deps, 2))

    # visits: "bob visited springfield ." / "bob and carol visited springfield ."
    for i, (person, city) in enumerate(product(PERSONS, CITIES)):
        if i % 3:
            continue
        tokens = [tok(person, person, "nnp", "person"), tok("visited", "visit", "vbd"),
                  tok(city, city, "nnp", "location")]
        deps = [(1, 0, "nsubj"), (1, 2, "dobj")]
        add(*punct(tokens, deps, 1))
        if i % 6 == 0:
            other = PERSONS[(i + 1) % len(PERSONS)]
            tokens = [tok(person, person, "nnp", "person"), tok("and", "and", "cc"),
                      tok(other, other, "nnp", "person"), tok("visited", "visit", "vbd"),
                      tok(city, city, "nnp", "location")]
            deps = [(0, 1, "cc"), (0, 2, "conj"), (3, 0, "nsubj"), (3, 4, "dobj")]
            add(*punct(tokens, deps, 3))

    # pronouns: "he ran quickly ."
    for i, ((verb, vlem), adv) in enumerate(product(V_PAST, ADVS)):
        if i % 2:
            continue
        pron = "he" if i % 4 else "she"
        tokens = [tok(pron, pron, "prp"), tok(verb, vlem, "vbd"), tok(adv, adv, "rb")]
        add(*punct(tokens, [(1, 0, "nsubj"), (1, 2, "advmod")], 1))

    # located orgs: "acme is in springfield ."
    for i, (org, city) in enumerate(product(ORGS, CITIES)):
        if i % 2:
            continue
        tokens = [tok(org, org, "nnp", "organization"), tok("is", "be", "vbz"),
                  tok("in", "in", "in"), tok(city, city, "nnp", "location")]
        deps = [(3, 0, "nsubj"), (3, 1, "cop"), (3, 2, "case")]
        add(*punct(tokens, deps, 3))

    # the worked example sentence, with its dependency fan-out from "son"
    tokens = [tok("he", "he", "prp", "person"), tok("was", "be", "vbd"), tok("a", "a", "dt"),
              tok("son", "son", "nn"), tok("of", "of", "in"),
              tok("david", "david", "nnp", "person"), tok("and", "and", "cc"),
              tok("mary", "mary", "nnp", "person"), tok("m", "m", "nnp", "person"),
              tok("anderson", "anderson", "nnp", "person")]
    deps = [(3, 0, "nsubj"), (3, 1, "cop"), (3, 2, "det"), (3, 5, "nmod"), (5, 4, "case"),
            (5, 6, "cc"), (3, 9, "conj"), (9, 7, "compound"), (9, 8, "compound")]
    tokens, deps = punct(tokens, deps, 3)
    sentences.append(AnnotatedSentence("fig1", tuple(tokens), tuple(deps)))

    # the same example with its person mentions rendered as placeholder
    # tokens, the way the few-shot pipeline views typed spans
    tokens = [tok("person", "person", "nnp", "person"), tok("was", "be", "vbd"),
              tok("son", "son", "nn"), tok("of", "of", "in"), tok("david", "david", "nnp"),
              tok("and", "and", "cc"), tok("person", "person", "nnp", "person")]
    deps = [(2, 0, "nsubj"), (2, 1, "cop"), (4, 3, "case"), (2, 4, "nmod"), (4, 5, "cc"), (2, 6, "conj")]
    tokens, deps = punct(tokens, deps, 2)
    sentences.append(AnnotatedSentence("fig1-surface", tuple(tokens), tuple(deps)))

    out = Path(__file__).resolve().parents[1] / "data" / "micro_corpus.jsonl"
    out.parent.mkdir(exist_ok=True)
    save_corpus(sentences, out)
    print(f"wrote {len(sentences)} sentences to {out}")


if __name__ == "__main__":
    main()
