import pytest

from ruleforge.corpus import SpecEntry, Specification
from ruleforge.matcher import check_spec, find_matches
from ruleforge.pattern import print_pattern
from ruleforge.scoring import AugmentedStaticScorer, Scorer, StaticScorer
from ruleforge.search import ScorerError, SearchConfig, synthesize



class FailingScorer(Scorer):
    def score_transition(self, current, candidate, entry):
        raise ValueError("boom")


class RecordingScorer(StaticScorer):
    """Static scores, but remembers every batch for queue-discipline checks."""

    def __init__(self):
        super().__init__()
        self.batches = []

    def score_batch(self, current, candidates, entry):
        scores = super().score_batch(current, candidates, entry)
        self.batches.append(scores)
        return scores


class TestSynthesize:
    def test_figure_path_spec(self, fig1_path_spec):
        report = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=1000))
        assert report.found
        assert check_spec(report.rule, fig1_path_spec)
        assert report.states_explored <= 1000

    def test_counter_example_only_spec(self, fig1_path_sentence):
        spec = Specification((SpecEntry(fig1_path_sentence, frozenset()),))
        report = synthesize(spec, StaticScorer(), SearchConfig(max_states=2000))
        assert report.found
        assert len(find_matches(report.rule, fig1_path_sentence)) == 0

    def test_budget_one(self, fig1_path_spec):
        report = synthesize(fig1_path_spec, StaticScorer(), SearchConfig(max_states=1))
        assert not report.found
        assert report.states_explored == 1

    def test_found_rule_always_passes_check_spec(self, fig1_path_spec):
        for scorer in (StaticScorer(), AugmentedStaticScorer()):
            report = synthesize(fig1_path_spec, scorer, SearchConfig(max_states=1500))
            if report.found:
                assert check_spec(report.rule, fig1_path_spec)

    def test_deterministic(self, fig1_path_spec):
        runs = [
            synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=500, record_trace=True))
            for _ in range(2)
        ]
        assert runs[0].trace == runs[1].trace
        assert print_pattern(runs[0].rule) == print_pattern(runs[1].rule)
        assert runs[0].states_explored == runs[1].states_explored

    def test_monotone_in_budget(self, fig1_path_spec):
        small = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=1000))
        assert small.found
        bigger = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=2000))
        assert bigger.found
        assert bigger.states_explored == small.states_explored
        assert print_pattern(bigger.rule) == print_pattern(small.rule)

    def test_scorer_failure_carries_state(self, fig1_path_spec):
        with pytest.raises(ScorerError) as exc:
            synthesize(fig1_path_spec, FailingScorer(), SearchConfig(max_states=10))
        assert exc.value.state is not None
        assert "HOLE" in str(exc.value)

    def test_trace_records_popped_states(self, fig1_path_spec):
        report = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=50, record_trace=True))
        assert report.trace[0] == (1, "HOLE", 0.0)
        steps = [step for step, _, _ in report.trace]
        assert steps == list(range(1, len(report.trace) + 1))

    def test_reject_list_skips_rule_text(self, fig1_path_spec):
        first = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=2000))
        assert first.found
        second = synthesize(
            fig1_path_spec,
            AugmentedStaticScorer(),
            SearchConfig(max_states=4000, reject=frozenset({print_pattern(first.rule)})),
        )
        assert second.found
        assert print_pattern(second.rule) != print_pattern(first.rule)
        assert check_spec(second.rule, fig1_path_spec)

    def test_queue_pop_is_maximum(self, fig1_path_spec):
        # rebuild the queue contents from the trace: every popped score must
        # equal the maximum of what was available at that moment. Pruning
        # stays off so each incomplete pop produces exactly one batch on
        # this single-entry spec; complete pops produce none.
        scorer = RecordingScorer()
        report = synthesize(
            fig1_path_spec,
            scorer,
            SearchConfig(max_states=120, record_trace=True, pruning_enabled=False),
        )
        available = [0.0]  # root score
        batch_iter = iter(scorer.batches)
        for _step, printed, score in report.trace:
            assert score == pytest.approx(max(available))
            available.remove(max(available))
            if "HOLE" in printed:
                available.extend(next(batch_iter))
        assert next(batch_iter, None) is None

    def test_pruning_agreement(self, fig1_path_spec):
        on = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=2000, pruning_enabled=True))
        off = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=2000, pruning_enabled=False))
        if on.found and off.found:
            assert print_pattern(on.rule) == print_pattern(off.rule)
        assert on.states_pruned > 0
        assert off.states_pruned == 0


class TestConfig:
    def test_max_states_validated(self):
        with pytest.raises(Exception):
            SearchConfig(max_states=0)

    def test_report_json_shape(self, fig1_path_spec):
        report = synthesize(fig1_path_spec, AugmentedStaticScorer(), SearchConfig(max_states=600))
        payload = report.to_json()
        assert set(payload) == {"found", "rule", "statesExplored", "statesPruned", "queuePeak"}
