"""Annotated sentences, corpora, and extraction specifications.

Covers the data model (tokens, sentences, spans, specifications), JSON
file formats, shortest dependency paths with sentence-order linearization,
and linear-scan corpus querying. Everything here is immutable after
construction and safe to share across concurrent synthesis jobs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import RuleforgeError

FIELDS = ("word", "lemma", "tag", "entity")
NO_ENTITY = "o"


class CorpusError(RuleforgeError):
    """Malformed corpus or specification input."""


class DependencyPathError(RuleforgeError):
    """Two tokens live in disconnected dependency components."""


@dataclass(frozen=True, slots=True)
class Token:
    """One token with word, lemma, part-of-speech tag, and entity label.

    All field values are lowercased on construction; comparisons everywhere
    else are therefore exact. The entity label "o" marks tokens outside any
    entity mention.
    """

    word: str
    lemma: str
    tag: str
    entity: str = NO_ENTITY

    def __post_init__(self) -> None:
        for name in FIELDS:
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise CorpusError(f"token field '{name}' must be a non-empty string")
            object.__setattr__(self, name, value.lower())

    def get(self, field: str) -> str:
        if field not in FIELDS:
            raise CorpusError(f"unknown token field '{field}'")
        return getattr(self, field)


@dataclass(frozen=True, slots=True)
class AnnotatedSentence:
    """A tokenized sentence plus optional dependency edges.

    Edges are (head, dependent, label) triples over token indices and are
    treated as undirected by the path finder; labels are kept but never
    interpreted.
    """

    id: str
    tokens: tuple[Token, ...]
    deps: tuple[tuple[int, int, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(
            self, "deps", tuple((int(h), int(d), str(lbl)) for h, d, lbl in self.deps)
        )
        if not self.id:
            raise CorpusError("sentence id must be non-empty")
        n = len(self.tokens)
        for head, dep, _label in self.deps:
            if not (0 <= head < n and 0 <= dep < n):
                raise CorpusError(f"sentence '{self.id}': dependency index out of range")
            if head == dep:
                raise CorpusError(f"sentence '{self.id}': self-loop dependency on token {head}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(t.word for t in self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True, slots=True, order=True)
class Span:
    """Half-open token range [start, end); always non-empty."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise CorpusError(f"invalid span [{self.start},{self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def covers(self, index: int) -> bool:
        return self.start <= index < self.end

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True, slots=True)
class SpecEntry:
    """One (sentence, highlighted spans) example.

    An empty selection set is legal and means the synthesized rule must
    match nothing in this sentence (a counter-example).
    """

    sentence: AnnotatedSentence
    selections: frozenset[Span] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "selections", frozenset(self.selections))
        n = len(self.sentence)
        ordered = sorted(self.selections)
        for span in ordered:
            if span.end > n:
                raise CorpusError(
                    f"selection [{span.start},{span.end}) out of range for sentence '{self.sentence.id}'"
                )
        for left, right in zip(ordered, ordered[1:]):
            if left.overlaps(right):
                raise CorpusError(
                    f"overlapping selections in sentence '{self.sentence.id}': "
                    f"[{left.start},{left.end}) and [{right.start},{right.end})"
                )

    @property
    def ordered_selections(self) -> tuple[Span, ...]:
        return tuple(sorted(self.selections))

    @property
    def highlighted(self) -> frozenset[int]:
        return frozenset(i for span in self.selections for i in range(span.start, span.end))


class SpecMode(str, Enum):
    SURFACE = "surface"
    SIMPLIFIED_SYNTAX = "path"


@dataclass(frozen=True, slots=True)
class Specification:
    """A non-empty set of examples a single rule must satisfy exactly."""

    entries: tuple[SpecEntry, ...]
    mode: SpecMode = SpecMode.SURFACE

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "mode", SpecMode(self.mode))
        if not self.entries:
            raise CorpusError("specification needs at least one entry")
        if self.mode is SpecMode.SIMPLIFIED_SYNTAX:
            for entry in self.entries:
                if entry.sentence.deps:
                    raise CorpusError(
                        "path-mode entries must use linearized sentences without dependency edges"
                    )


# ---------------------------------------------------------------------------
# JSON formats.
#
# Corpus file: one sentence object per line,
#   {"id": "s1", "tokens": [{"word": ..., "lemma": ..., "tag": ..., "entity": ...}, ...],
#    "deps": [[head, dependent, "label"], ...]}
#
# Specification file:
#   {"mode": "surface"|"path",
#    "entries": [{"sentence": {...} | {"ref": "<corpus-id>"}, "selections": [[start, end], ...]}]}
# ---------------------------------------------------------------------------


def canonical_dumps(obj) -> str:
    """Compact JSON with a stable byte layout, shared by every file writer."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def sentence_from_json(obj) -> AnnotatedSentence:
    if not isinstance(obj, dict):
        raise CorpusError("sentence record must be a JSON object")
    for key in ("id", "tokens"):
        if key not in obj:
            raise CorpusError(f"missing field '{key}'")
    tokens = []
    for i, tok in enumerate(obj["tokens"]):
        if not isinstance(tok, dict):
            raise CorpusError(f"token {i}: expected an object")
        for key in ("word", "lemma", "tag"):
            if key not in tok:
                raise CorpusError(f"token {i}: missing field '{key}'")
        try:
            tokens.append(Token(tok["word"], tok["lemma"], tok["tag"], tok.get("entity", NO_ENTITY)))
        except CorpusError as exc:
            raise CorpusError(f"token {i}: {exc}") from exc
    deps = []
    for i, edge in enumerate(obj.get("deps", ())):
        if not (isinstance(edge, (list, tuple)) and len(edge) == 3):
            raise CorpusError(f"dep {i}: expected [head, dependent, label]")
        deps.append((edge[0], edge[1], edge[2]))
    return AnnotatedSentence(str(obj["id"]), tuple(tokens), tuple(deps))


def sentence_to_json(sentence: AnnotatedSentence) -> dict:
    return {
        "id": sentence.id,
        "tokens": [
            {"word": t.word, "lemma": t.lemma, "tag": t.tag, "entity": t.entity}
            for t in sentence.tokens
        ],
        "deps": [[h, d, lbl] for h, d, lbl in sentence.deps],
    }


def load_corpus(path) -> list[AnnotatedSentence]:
    """Read a line-delimited JSON corpus file, preserving file order.

    Raises CorpusError naming the offending line when a record is malformed
    or a sentence id repeats; an empty file is an empty corpus.
    """
    sentences: list[AnnotatedSentence] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            try:
                sentence = sentence_from_json(obj)
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from exc
            if sentence.id in seen:
                raise CorpusError(f"line {lineno}: duplicate sentence id '{sentence.id}'")
            seen.add(sentence.id)
            sentences.append(sentence)
    return sentences


def save_corpus(sentences, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sentence in sentences:
            fh.write(canonical_dumps(sentence_to_json(sentence)) + "\n")


def corpus_index(corpus) -> dict[str, AnnotatedSentence]:
    return {sentence.id: sentence for sentence in corpus}


def entry_to_json(entry: SpecEntry) -> dict:
    return {
        "sentence": sentence_to_json(entry.sentence),
        "selections": [[s.start, s.end] for s in entry.ordered_selections],
    }


def spec_to_json(spec: Specification) -> dict:
    return {"mode": spec.mode.value, "entries": [entry_to_json(e) for e in spec.entries]}


def spec_dumps(spec: Specification) -> str:
    """Canonical byte layout for specification files (stable across tools)."""
    return canonical_dumps(spec_to_json(spec)) + "\n"


def save_specification(spec: Specification, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(spec_dumps(spec))


def spec_from_json(obj, index: dict[str, AnnotatedSentence] | None = None) -> Specification:
    if not isinstance(obj, dict) or "entries" not in obj:
        raise CorpusError("specification must be an object with an 'entries' list")
    try:
        mode = SpecMode(str(obj.get("mode", "surface")).lower())
    except ValueError as exc:
        raise CorpusError(f"unknown specification mode '{obj.get('mode')}'") from exc
    entries = []
    for i, raw in enumerate(obj["entries"]):
        if not isinstance(raw, dict) or "sentence" not in raw:
            raise CorpusError(f"entry {i}: expected an object with a 'sentence'")
        sent_obj = raw["sentence"]
        if isinstance(sent_obj, dict) and "ref" in sent_obj:
            if index is None:
                raise CorpusError(f"entry {i}: sentence ref '{sent_obj['ref']}' needs a corpus")
            try:
                sentence = index[sent_obj["ref"]]
            except KeyError as exc:
                raise CorpusError(f"entry {i}: unknown sentence ref '{sent_obj['ref']}'") from exc
        else:
            try:
                sentence = sentence_from_json(sent_obj)
            except CorpusError as exc:
                raise CorpusError(f"entry {i}: {exc}") from exc
        selections = []
        for pair in raw.get("selections", ()):
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise CorpusError(f"entry {i}: selection must be a [start, end] pair")
            selections.append(Span(int(pair[0]), int(pair[1])))
        try:
            entries.append(SpecEntry(sentence, frozenset(selections)))
        except CorpusError as exc:
            raise CorpusError(f"entry {i}: {exc}") from exc
    return Specification(tuple(entries), mode)


def load_specification(path, corpus=None) -> Specification:
    index = corpus_index(corpus) if corpus is not None else None
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid specification JSON: {exc.msg}") from exc
    return spec_from_json(obj, index)


# ---------------------------------------------------------------------------
# Dependency paths.
# ---------------------------------------------------------------------------


def shortest_dep_path(sentence: AnnotatedSentence, a: int, b: int) -> list[int]:
    """Shortest undirected dependency path from token a to token b, inclusive.

    Among equal-length paths the lexicographically smallest index sequence
    wins, which keeps fixtures and generated data stable.
    """
    n = len(sentence)
    if not (0 <= a < n and 0 <= b < n):
        raise CorpusError(f"path endpoint out of range for sentence '{sentence.id}'")
    if a == b:
        raise CorpusError("path endpoints must differ")
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for head, dep, _label in sentence.deps:
        adjacency[head].append(dep)
        adjacency[dep].append(head)
    for neighbors in adjacency:
        neighbors.sort()

    dist = {b: 0}
    frontier = [b]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adjacency[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    if a not in dist:
        raise DependencyPathError("no dependency path")

    path = [a]
    current = a
    while current != b:
        current = min(v for v in adjacency[current] if dist.get(v, n + 1) == dist[current] - 1)
        path.append(current)
    return path


def span_head(sentence: AnnotatedSentence, span: Span) -> int:
    """Head token of an entity span: the token whose dependency head falls
    outside the span (rightmost such token wins). A span whose tokens all
    attach internally falls back to its last token."""
    head_of: dict[int, int] = {}
    for head, dep, _label in sentence.deps:
        head_of.setdefault(dep, head)
    best = None
    for i in range(span.start, span.end):
        head = head_of.get(i)
        if head is None or not span.covers(head):
            best = i
    return best if best is not None else span.end - 1


def linearize_path(sentence: AnnotatedSentence, path) -> AnnotatedSentence:
    """Project path tokens back into sentence order, dropping duplicates.

    The result carries no dependency edges and gets the id suffix "#path".
    """
    if not path:
        raise CorpusError("cannot linearize an empty path")
    n = len(sentence)
    for i in path:
        if not (0 <= i < n):
            raise CorpusError(f"path index {i} out of range for sentence '{sentence.id}'")
    order = sorted(set(path))
    return AnnotatedSentence(sentence.id + "#path", tuple(sentence.tokens[i] for i in order), ())


def query_corpus(corpus, pattern, limit: int | None = None) -> list[tuple[AnnotatedSentence, Span]]:
    """Scan a corpus in order and return up to `limit` (sentence, span) hits.

    Matching semantics come from the pattern executor; the pattern must be
    complete (hole-free).
    """
    from .matcher import find_matches, require_complete

    require_complete(pattern)
    if limit is not None and limit <= 0:
        return []
    hits: list[tuple[AnnotatedSentence, Span]] = []
    for sentence in corpus:
        for span in find_matches(pattern, sentence):
            hits.append((sentence, span))
            if limit is not None and len(hits) >= limit:
                return hits
    return hits
