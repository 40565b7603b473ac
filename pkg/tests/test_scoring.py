import math
import random

import numpy as np
import pytest

from ruleforge.corpus import Span, SpecEntry, Specification
from ruleforge.pattern import State, expansions, parse_pattern, print_pattern
from ruleforge.scoring import (
    AugmentedStaticScorer,
    ContextualScorer,
    CostTable,
    ScorerModel,
    ScoringError,
    StaticScorer,
    TrainConfig,
    TrainingExample,
    augmentation_reward,
    contextual_score,
    cross_entropy,
    featurize,
    fnv1a64,
    score_transition_multi,
    static_cost,
    strip_holes,
    train_contextual,
)

from conftest import make_sentence
from reference_matcher import random_sentence


def as_state(pattern):
    return State(pattern, static_cost(pattern), 0)


@pytest.fixture
def path_entry(fig1_path_sentence):
    return SpecEntry(fig1_path_sentence, frozenset({Span(0, 3)}))


class TestCostTable:
    def test_defaults_validate(self):
        table = CostTable.default()
        assert table.per_node["not"] > max(table.per_field.values())

    def test_negation_must_stay_expensive(self):
        with pytest.raises(ScoringError, match="negation"):
            CostTable.default().with_overrides({"not": 0.5})

    def test_overrides(self):
        table = CostTable.default().with_overrides({"concat": 2.0, "word": 0.5})
        assert table.per_node["concat"] == 2.0
        assert table.per_field["word"] == 0.5

    def test_unknown_key(self):
        with pytest.raises(ScoringError, match="unknown cost key"):
            CostTable.default().with_overrides({"frobnicate": 1.0})


class TestStaticCost:
    def test_concat_of_holes(self):
        assert static_cost(parse_pattern("HOLE HOLE")) == pytest.approx(3.0)

    def test_single_word_token(self):
        assert static_cost(parse_pattern("[word=son]")) == pytest.approx(2.0)

    def test_negated_hole(self):
        assert static_cost(parse_pattern("[!HOLE]")) == pytest.approx(7.0)

    def test_rank_invariance_under_scaling(self, path_entry):
        spec = Specification((path_entry,), "path")
        base = CostTable.default()
        scaled = base.scaled(3.5)
        state = State.initial(base)
        kids_base = expansions(state, spec, base)
        kids_scaled = expansions(State.initial(scaled), spec, scaled)
        rank_base = sorted(range(len(kids_base)), key=lambda i: -(-kids_base[i].static_cost))
        rank_scaled = sorted(range(len(kids_scaled)), key=lambda i: -(-kids_scaled[i].static_cost))
        assert rank_base == rank_scaled

    def test_static_score_ignores_entry(self, path_entry):
        scorer = StaticScorer()
        candidate = as_state(parse_pattern("[word=son] HOLE"))
        rng = random.Random(5)
        scores = set()
        for _ in range(10):
            sentence = random_sentence(rng)
            entry = SpecEntry(sentence, frozenset({Span(0, 1)}))
            scores.add(scorer.score_transition(as_state(parse_pattern("HOLE")), candidate, entry))
        assert len(scores) == 1


class TestStripAndReward:
    def test_worked_example_strip(self):
        state = parse_pattern("[entity=person] [tag=nn] [HOLE]")
        assert print_pattern(strip_holes(state)) == "[entity=person] [tag=nn]"

    def test_worked_example_reward(self, path_entry):
        state = as_state(parse_pattern("[entity=person] [tag=nn] [HOLE]"))
        assert augmentation_reward(state, path_entry) == 2

    def test_middle_hole_keeps_prefix_only(self):
        state = parse_pattern("[word=a] [HOLE] [word=b]")
        assert print_pattern(strip_holes(state)) == "[word=a]"

    def test_nothing_survives(self, path_entry):
        assert strip_holes(parse_pattern("[HOLE]")) is None
        assert augmentation_reward(as_state(parse_pattern("[HOLE]")), path_entry) == 0

    def test_outside_matches_penalized(self):
        s = make_sentence("s", [("a", "a", "x"), ("b", "b", "x")])
        entry = SpecEntry(s, frozenset({Span(0, 1)}))
        # matches a (inside) and b (outside): +1 - 1 = 0
        state = as_state(parse_pattern("([word=a]|[word=b]) HOLE"))
        assert augmentation_reward(state, entry) == 0

    def test_satisfying_rule_reward_equals_highlight_count(self, path_entry):
        rule = parse_pattern("[entity=person] [word=son] [entity=person]")
        assert augmentation_reward(as_state(rule), path_entry) == 3

    def test_augmented_scorer_combines(self, path_entry):
        scorer = AugmentedStaticScorer(reward_weight=1.0)
        candidate = as_state(parse_pattern("[entity=person] [tag=nn] [HOLE]"))
        expected = -candidate.static_cost + 2
        got = scorer.score_transition(as_state(parse_pattern("HOLE")), candidate, path_entry)
        assert got == pytest.approx(expected)


class TestMultiEntryAveraging:
    def test_single_entry(self, path_entry):
        spec = Specification((path_entry,), "path")
        scorer = StaticScorer()
        cur, cand = as_state(parse_pattern("HOLE")), as_state(parse_pattern("[HOLE]"))
        assert score_transition_multi(scorer, cur, cand, spec) == scorer.score_transition(
            cur, cand, path_entry
        )

    def test_mean_and_permutation(self, fig1_path_sentence):
        other = make_sentence("o", [("son", "son", "nn")])
        e1 = SpecEntry(fig1_path_sentence, frozenset({Span(1, 2)}))
        e2 = SpecEntry(other, frozenset({Span(0, 1)}))
        scorer = AugmentedStaticScorer()
        cur = as_state(parse_pattern("HOLE"))
        cand = as_state(parse_pattern("[word=son] HOLE"))
        a = scorer.score_transition(cur, cand, e1)
        b = scorer.score_transition(cur, cand, e2)
        spec_ab = Specification((e1, e2))
        spec_ba = Specification((e2, e1))
        assert score_transition_multi(scorer, cur, cand, spec_ab) == pytest.approx((a + b) / 2)
        assert score_transition_multi(scorer, cur, cand, spec_ba) == pytest.approx((a + b) / 2)
        low, high = min(a, b), max(a, b)
        assert low <= score_transition_multi(scorer, cur, cand, spec_ab) <= high


class TestFeaturize:
    def test_deterministic(self, path_entry):
        cur = as_state(parse_pattern("HOLE"))
        cand = as_state(parse_pattern("[word=son] HOLE"))
        assert featurize(cur, cand, path_entry, 1 << 12) == featurize(cur, cand, path_entry, 1 << 12)

    def test_sensitive_to_highlight_word(self, fig1_path_sentence):
        cur = as_state(parse_pattern("HOLE"))
        cand = as_state(parse_pattern("[word=son] HOLE"))
        e1 = SpecEntry(fig1_path_sentence, frozenset({Span(0, 3)}))
        changed = make_sentence(
            "c", [("he", "he", "prp", "person"), ("heir", "heir", "nn"), ("anderson", "anderson", "nnp", "person")]
        )
        e2 = SpecEntry(changed, frozenset({Span(0, 3)}))
        assert featurize(cur, cand, e1, 1 << 12) != featurize(cur, cand, e2, 1 << 12)

    def test_swapping_states_changes_vector(self, path_entry):
        a = as_state(parse_pattern("HOLE"))
        b = as_state(parse_pattern("[word=son] HOLE"))
        assert featurize(a, b, path_entry, 1 << 12) != featurize(b, a, path_entry, 1 << 12)

    def test_dim_must_be_power_of_two(self, path_entry):
        with pytest.raises(ScoringError):
            featurize(as_state(parse_pattern("HOLE")), as_state(parse_pattern("HOLE")), path_entry, 1000)

    def test_fnv_reference_values(self):
        # standard FNV-1a 64 test vectors
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C


class TestContextualScore:
    def test_in_unit_interval(self, path_entry):
        model = ScorerModel.zeros(1 << 12)
        rng = np.random.default_rng(0)
        model.weights[:] = rng.normal(0, 2.0, size=model.dim)
        cur = as_state(parse_pattern("HOLE"))
        cand = as_state(parse_pattern("[word=son] HOLE"))
        score = contextual_score(model, featurize(cur, cand, path_entry, model.dim))
        assert 0.0 < score < 1.0

    def test_batch_equals_single(self, path_entry):
        model = ScorerModel.zeros(1 << 12)
        rng = np.random.default_rng(1)
        model.weights[:] = rng.normal(0, 0.1, size=model.dim)
        scorer = ContextualScorer(model)
        cur = as_state(parse_pattern("HOLE"))
        cands = [as_state(parse_pattern(t)) for t in ("[HOLE]", "HOLE HOLE", "HOLE?")]
        batch = scorer.score_batch(cur, cands, path_entry)
        singles = [scorer.score_transition(cur, c, path_entry) for c in cands]
        assert batch == singles
        # and matches the dict-based featurize path
        for cand, score in zip(cands, batch):
            z = model.bias + sum(
                model.weights[i] * v for i, v in featurize(cur, cand, path_entry, model.dim).items()
            )
            assert score == pytest.approx(1.0 / (1.0 + math.exp(-z)), abs=1e-9)


def tiny_training_set(seed=0, items=60):
    """Labeled sibling sets where the positive candidate introduces the
    field value that appears in the entry's highlight."""
    rng = random.Random(seed)
    examples = []
    words = ["dog", "cat", "bird", "horse", "fox", "crow"]
    for i in range(items):
        target = rng.choice(words)
        decoys = rng.sample([w for w in words if w != target], 3)
        sentence = make_sentence(
            f"t{i}",
            [("the", "the", "dt"), (target, target, "nn"), ("ran", "run", "vbd")],
        )
        entry = SpecEntry(sentence, frozenset({Span(1, 2)}))
        current = parse_pattern("[HOLE]")
        positive = parse_pattern(f"[word={target}]")
        examples.append(TrainingExample(entry, current, positive, 1, item=i, step=0))
        for decoy in decoys:
            examples.append(
                TrainingExample(entry, current, parse_pattern(f"[word={decoy}]"), 0, item=i, step=0)
            )
    return examples


class TestTraining:
    def test_loss_drops_below_chance(self):
        examples = tiny_training_set(seed=1, items=80)
        split = int(len(examples) * 0.8)
        train, held = examples[:split], examples[split:]
        model = train_contextual(train, TrainConfig(dim=1 << 12, seed=3))
        assert cross_entropy(model, held) < 0.693

    def test_deterministic_given_seed(self):
        examples = tiny_training_set(seed=2, items=40)
        m1 = train_contextual(examples, TrainConfig(dim=1 << 10, seed=9))
        m2 = train_contextual(examples, TrainConfig(dim=1 << 10, seed=9))
        assert np.array_equal(m1.weights, m2.weights)
        assert m1.bias == m2.bias

    def test_empty_stage_warns(self):
        examples = tiny_training_set(seed=3, items=10)
        big = make_sentence("big", [("w", "w", "x")] * 25)
        entry = SpecEntry(big, frozenset({Span(0, 6)}))
        far = [
            TrainingExample(entry, ex.current, ex.candidate, ex.label) for ex in examples
        ]
        with pytest.warns(UserWarning, match="stage 'easy'"):
            train_contextual(far, TrainConfig(dim=1 << 10, seed=1))

    def test_save_load_identical_scores(self, tmp_path, path_entry):
        examples = tiny_training_set(seed=4, items=30)
        model = train_contextual(examples, TrainConfig(dim=1 << 12, seed=5))
        path = tmp_path / "model.json"
        model.save(path)
        loaded = ScorerModel.load(path)
        assert loaded.dim == model.dim
        assert np.array_equal(loaded.weights, model.weights)
        rng = random.Random(11)
        for _ in range(100):
            sentence = random_sentence(rng, max_tokens=6)
            entry = SpecEntry(sentence, frozenset({Span(0, 1)}))
            cur = as_state(parse_pattern("HOLE"))
            cand = as_state(parse_pattern("[word=a] HOLE"))
            a = contextual_score(model, featurize(cur, cand, entry, model.dim))
            b = contextual_score(loaded, featurize(cur, cand, entry, loaded.dim))
            assert a == b

    def test_loader_rejects_unknown_version(self, tmp_path):
        model = ScorerModel.zeros(1 << 8)
        path = tmp_path / "model.json"
        model.save(path)
        blob = path.read_text().replace('"version":1', '"version":99')
        path.write_text(blob)
        with pytest.raises(ScoringError, match="version"):
            ScorerModel.load(path)

    def test_shuffled_label_control(self):
        examples = tiny_training_set(seed=6, items=80)
        split = int(len(examples) * 0.8)
        train, held = list(examples[:split]), examples[split:]
        rng = random.Random(13)
        labels = [ex.label for ex in train]
        rng.shuffle(labels)
        shuffled = [
            TrainingExample(ex.entry, ex.current, ex.candidate, lab)
            for ex, lab in zip(train, labels)
        ]
        model = train_contextual(shuffled, TrainConfig(dim=1 << 12, seed=7))
        positives = [ex for ex in held if ex.label == 1]
        negatives = [ex for ex in held if ex.label == 0][: len(positives)]
        balanced = positives + negatives
        hits = 0
        for ex in balanced:
            p = contextual_score(model, featurize(ex.current, ex.candidate, ex.entry, model.dim))
            hits += int((p >= 0.5) == bool(ex.label))
        assert abs(hits / len(balanced) - 0.5) <= 0.05
