import json
from pathlib import Path

import pytest

from ruleforge.corpus import (
    CorpusError,
    DependencyPathError,
    Span,
    SpecEntry,
    SpecMode,
    Specification,
    Token,
    canonical_dumps,
    linearize_path,
    load_corpus,
    load_specification,
    query_corpus,
    save_specification,
    sentence_from_json,
    sentence_to_json,
    shortest_dep_path,
    span_head,
    spec_dumps,
    spec_from_json,
    spec_to_json,
)
from ruleforge.pattern import parse_pattern

from conftest import make_sentence


def write_corpus(tmp_path, records):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records) + ("\n" if records else ""))
    return path


RECORD = {
    "id": "s1",
    "tokens": [
        {"word": "The", "lemma": "the", "tag": "DT", "entity": "O"},
        {"word": "dog", "lemma": "dog", "tag": "NN", "entity": "O"},
        {"word": "barked", "lemma": "bark", "tag": "VBD", "entity": "O"},
    ],
    "deps": [[1, 0, "det"], [2, 1, "nsubj"]],
}


class TestLoadCorpus:
    def test_single_record(self, tmp_path):
        corpus = load_corpus(write_corpus(tmp_path, [RECORD]))
        assert len(corpus) == 1
        assert len(corpus[0].tokens) == 3
        # values are lowercased at load time
        assert corpus[0].tokens[0].word == "the"
        assert corpus[0].tokens[0].tag == "dt"

    def test_empty_file(self, tmp_path):
        assert load_corpus(write_corpus(tmp_path, [])) == []

    def test_dep_index_out_of_range(self, tmp_path):
        bad = dict(RECORD, deps=[[3, 0, "det"]])
        with pytest.raises(CorpusError, match="dependency index out of range"):
            load_corpus(write_corpus(tmp_path, [bad]))

    def test_error_names_line_and_field(self, tmp_path):
        bad = {"id": "s2", "tokens": [{"word": "x", "lemma": "x"}]}
        with pytest.raises(CorpusError, match=r"line 2: token 0: missing field 'tag'"):
            load_corpus(write_corpus(tmp_path, [RECORD, bad]))

    def test_duplicate_id(self, tmp_path):
        with pytest.raises(CorpusError, match="duplicate sentence id"):
            load_corpus(write_corpus(tmp_path, [RECORD, RECORD]))

    def test_self_loop_rejected(self):
        with pytest.raises(CorpusError, match="self-loop"):
            sentence_from_json(dict(RECORD, deps=[[1, 1, "x"]]))

    def test_round_trip(self):
        sentence = sentence_from_json(RECORD)
        assert sentence_from_json(sentence_to_json(sentence)) == sentence


class TestTypes:
    def test_token_requires_nonempty_fields(self):
        with pytest.raises(CorpusError, match="non-empty"):
            Token("", "x", "nn")

    def test_span_validation(self):
        with pytest.raises(CorpusError):
            Span(2, 2)
        with pytest.raises(CorpusError):
            Span(-1, 2)

    def test_entry_rejects_overlap(self, fig1_sentence):
        with pytest.raises(CorpusError, match="overlapping"):
            SpecEntry(fig1_sentence, frozenset({Span(0, 3), Span(2, 4)}))

    def test_entry_rejects_out_of_range(self, fig1_sentence):
        with pytest.raises(CorpusError, match="out of range"):
            SpecEntry(fig1_sentence, frozenset({Span(0, 12)}))

    def test_empty_selections_are_legal(self, fig1_sentence):
        entry = SpecEntry(fig1_sentence, frozenset())
        assert entry.highlighted == frozenset()

    def test_specification_requires_entries(self):
        with pytest.raises(CorpusError):
            Specification(())

    def test_path_mode_rejects_deps(self, fig1_sentence):
        entry = SpecEntry(fig1_sentence, frozenset({Span(0, 1)}))
        with pytest.raises(CorpusError, match="linearized"):
            Specification((entry,), SpecMode.SIMPLIFIED_SYNTAX)


class TestDependencyPaths:
    def test_figure1_path(self, fig1_sentence):
        # son attaches directly to both pronouns, so the path is he-son-anderson
        assert shortest_dep_path(fig1_sentence, 0, 9) == [0, 3, 9]

    def test_direct_edge(self):
        s = make_sentence("d", [("a", "a", "x"), ("b", "b", "x")], [(0, 1, "dep")])
        assert shortest_dep_path(s, 0, 1) == [0, 1]

    def test_prefers_shorter_path(self):
        # chain a-c-b plus a direct a-b edge: BFS must take the direct edge
        s = make_sentence(
            "t",
            [("a", "a", "x"), ("b", "b", "x"), ("c", "c", "x")],
            [(0, 2, "e"), (2, 1, "e"), (0, 1, "e")],
        )
        assert shortest_dep_path(s, 0, 1) == [0, 1]

    def test_symmetric_node_set(self, fig1_sentence):
        forward = shortest_dep_path(fig1_sentence, 0, 9)
        backward = shortest_dep_path(fig1_sentence, 9, 0)
        assert set(forward) == set(backward)

    def test_lexicographic_tie_break(self):
        # two length-2 paths: 0-1-3 and 0-2-3; smallest index sequence wins
        s = make_sentence(
            "tie",
            [("a", "a", "x"), ("b", "b", "x"), ("c", "c", "x"), ("d", "d", "x")],
            [(0, 1, "e"), (1, 3, "e"), (0, 2, "e"), (2, 3, "e")],
        )
        assert shortest_dep_path(s, 0, 3) == [0, 1, 3]

    def test_disconnected(self):
        s = make_sentence("x", [("a", "a", "x"), ("b", "b", "x")])
        with pytest.raises(DependencyPathError, match="no dependency path"):
            shortest_dep_path(s, 0, 1)

    def test_span_head_is_token_attached_outside(self, fig1_sentence):
        assert span_head(fig1_sentence, Span(7, 10)) == 9
        assert span_head(fig1_sentence, Span(0, 1)) == 0


class TestLinearize:
    def test_figure1_linearization(self, fig1_sentence):
        path = shortest_dep_path(fig1_sentence, 0, 9)
        lin = linearize_path(fig1_sentence, path)
        assert lin.words == ("he", "son", "anderson")
        assert lin.id == "fig1#path"
        assert lin.deps == ()

    def test_out_of_order_path_sorts(self, fig1_sentence):
        lin = linearize_path(fig1_sentence, [9, 0, 3])
        assert lin.words == ("he", "son", "anderson")

    def test_single_node(self, fig1_sentence):
        assert linearize_path(fig1_sentence, [3]).words == ("son",)

    def test_empty_path_errors(self, fig1_sentence):
        with pytest.raises(CorpusError):
            linearize_path(fig1_sentence, [])

    def test_position_monotone(self, fig1_sentence):
        path = shortest_dep_path(fig1_sentence, 9, 0)
        lin = linearize_path(fig1_sentence, path)
        positions = [fig1_sentence.words.index(w) for w in lin.words]
        assert positions == sorted(positions)


class TestQueryCorpus:
    def test_simple_hit(self):
        s = make_sentence("q", [("the", "the", "dt"), ("dog", "dog", "nn"), ("barked", "bark", "vbd")])
        hits = query_corpus([s], parse_pattern("[word=dog]"), limit=10)
        assert hits == [(s, Span(1, 2))]

    def test_no_hits(self):
        s = make_sentence("q", [("the", "the", "dt")])
        assert query_corpus([s], parse_pattern("[word=zebra]")) == []

    def test_limit_zero(self):
        s = make_sentence("q", [("the", "the", "dt")])
        assert query_corpus([s], parse_pattern("[]"), limit=0) == []

    def test_incomplete_pattern_rejected(self):
        s = make_sentence("q", [("the", "the", "dt")])
        with pytest.raises(Exception, match="holes"):
            query_corpus([s], parse_pattern("HOLE"))

    def test_matches_brute_force_scan(self, micro_corpus):
        from ruleforge.matcher import find_matches

        pattern = parse_pattern("[tag=dt] [tag=nn]")
        expected = []
        for sentence in micro_corpus:
            expected.extend((sentence, span) for span in find_matches(pattern, sentence))
        assert query_corpus(micro_corpus, pattern) == expected
        assert query_corpus(micro_corpus, pattern, limit=3) == expected[:3]


class TestSpecIO:
    def test_round_trip(self, tmp_path, fig1_sentence):
        spec = Specification((SpecEntry(fig1_sentence, frozenset({Span(0, 10)})),))
        path = tmp_path / "spec.json"
        save_specification(spec, path)
        loaded = load_specification(path)
        assert loaded == spec

    def test_ref_entries_resolve_against_corpus(self, tmp_path, fig1_sentence):
        obj = {"mode": "surface", "entries": [{"sentence": {"ref": "fig1"}, "selections": [[0, 3]]}]}
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(obj))
        spec = load_specification(path, corpus=[fig1_sentence])
        assert spec.entries[0].sentence is fig1_sentence

    def test_ref_without_corpus_errors(self):
        obj = {"mode": "surface", "entries": [{"sentence": {"ref": "s9"}, "selections": []}]}
        with pytest.raises(CorpusError, match="needs a corpus"):
            spec_from_json(obj)

    def test_canonical_bytes_are_stable(self, fig1_sentence):
        spec = Specification((SpecEntry(fig1_sentence, frozenset({Span(0, 3)})),))
        assert spec_dumps(spec) == spec_dumps(spec)
        assert spec_dumps(spec).endswith("\n")
        parsed = json.loads(spec_dumps(spec))
        assert parsed == spec_to_json(spec)
        # compact separators, no spaces
        assert '", "' not in spec_dumps(spec)

    def test_canonical_dumps_compact(self):
        assert canonical_dumps({"a": [1, 2]}) == '{"a":[1,2]}'

    def test_canonical_fixture_locks_ui_byte_compat(self, micro_corpus):
        # the browser UI asserts byte-identity against the same fixture file;
        # this side pins the writer so neither drifts
        fixture = Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures" / "canonical_spec.json"
        index = {s.id: s for s in micro_corpus}
        spec = Specification(
            (
                SpecEntry(index["fig1-surface"], frozenset({Span(0, 7)})),
                SpecEntry(index["m001"], frozenset({Span(2, 4)})),
            )
        )
        assert spec_dumps(spec) == fixture.read_text(encoding="utf-8")
