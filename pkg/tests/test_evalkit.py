import random
from collections import Counter

import pytest

from ruleforge.corpus import SpecMode
from ruleforge.evalkit import (
    NO_RELATION,
    Episode,
    EvalError,
    OracleScorer,
    RandomScorer,
    baseline_predict,
    episode_from_json,
    fewshot_predict,
    format_intrinsic_table,
    intrinsic_eval,
    load_background,
    load_episodes,
    micro_f1,
)
from ruleforge.scoring import AugmentedStaticScorer, StaticScorer
from ruleforge.search import SearchConfig
from ruleforge.selfsup import gen_dataset


@pytest.fixture(scope="module")
def items(micro_corpus):
    return gen_dataset(micro_corpus, 30, seed=61)


@pytest.fixture(scope="session")
def episodes_1shot(data_dir):
    return load_episodes(data_dir / "episodes_5w1s.json")


class TestIntrinsic:
    def test_oracle_scorer_hits_ceiling(self, items):
        report = intrinsic_eval(items, OracleScorer, SearchConfig(max_states=2000))
        assert report.found == report.total == len(items)
        for row in report.rows:
            assert row.steps == row.ceiling

    def test_solved_rows_carry_steps(self, items):
        report = intrinsic_eval(items, AugmentedStaticScorer(), SearchConfig(max_states=500))
        for row in report.rows:
            if row.found:
                assert row.steps >= 1
            else:
                assert row.steps is None

    def test_random_scorer_is_deterministic(self, items):
        a = intrinsic_eval(items[:10], RandomScorer(3), SearchConfig(max_states=300))
        b = intrinsic_eval(items[:10], RandomScorer(3), SearchConfig(max_states=300))
        assert a.to_json() == b.to_json()

    def test_stats_cover_solved_only(self, items):
        report = intrinsic_eval(items, StaticScorer(), SearchConfig(max_states=200))
        solved = [row for row in report.rows if row.found]
        assert report.found == len(solved)
        if solved:
            assert report.steps["max"] == max(row.steps for row in solved)
        else:
            assert report.steps is None

    def test_table_rendering(self, items):
        report = intrinsic_eval(items[:5], AugmentedStaticScorer(), SearchConfig(max_states=300))
        table = format_intrinsic_table({"augmented": report})
        for label in ("Timeout", "Rules found", "Ceiling avg", "Steps median"):
            assert label in table


class TestEpisodeTypes:
    def test_way_count_enforced(self, episodes_1shot):
        episode = episodes_1shot[0]
        with pytest.raises(EvalError, match="relations"):
            Episode(
                way_count=episode.way_count + 1,
                shot_count=episode.shot_count,
                support=episode.support,
                queries=episode.queries,
            )

    def test_query_gold_must_be_candidate(self, episodes_1shot):
        from ruleforge.evalkit import episode_to_json

        raw = episode_to_json(episodes_1shot[0])
        raw["queries"][0]["gold"] = "rel:bogus"
        with pytest.raises(EvalError, match="not a candidate"):
            episode_from_json(raw)


class TestFewshot:
    def test_separable_episode_earns_perfect_f1(self, episodes_1shot):
        episode = episodes_1shot[0]
        predictions = fewshot_predict(
            episode, SpecMode.SURFACE, AugmentedStaticScorer(), SearchConfig(max_states=400)
        )
        golds = [q.gold for q in episode.queries]
        assert micro_f1([p for _, p in predictions], golds, set(golds) - {NO_RELATION}) == 1.0

    def test_unseen_type_pair_maps_to_no_relation(self, episodes_1shot):
        episode = episodes_1shot[0]
        predictions = dict(
            fewshot_predict(episode, SpecMode.SURFACE, AugmentedStaticScorer(), SearchConfig(max_states=400))
        )
        for query in episode.queries:
            if query.gold == NO_RELATION:
                assert predictions[query] == NO_RELATION

    def test_synthesis_failure_degrades_to_no_relation(self, episodes_1shot):
        episode = episodes_1shot[0]
        predictions = fewshot_predict(
            episode, SpecMode.SURFACE, AugmentedStaticScorer(), SearchConfig(max_states=1)
        )
        assert all(label == NO_RELATION for _, label in predictions)

    def test_path_mode_with_negative_supports(self, episodes_1shot):
        episode = episodes_1shot[0]
        predictions = fewshot_predict(
            episode,
            SpecMode.SIMPLIFIED_SYNTAX,
            AugmentedStaticScorer(),
            SearchConfig(max_states=600),
            negative_supports=True,
        )
        golds = [q.gold for q in episode.queries]
        score = micro_f1([p for _, p in predictions], golds, set(golds) - {NO_RELATION})
        assert score == 1.0

    def test_deterministic(self, episodes_1shot):
        episode = episodes_1shot[1]
        runs = [
            fewshot_predict(episode, SpecMode.SURFACE, AugmentedStaticScorer(), SearchConfig(max_states=400))
            for _ in range(2)
        ]
        assert [p for _, p in runs[0]] == [p for _, p in runs[1]]


class TestBaseline:
    def test_no_compatible_supports_yields_no_relation(self, episodes_1shot):
        episode = episodes_1shot[0]
        rng = random.Random(0)
        predictions = dict(baseline_predict(episode, [], rng))
        for query in episode.queries:
            if query.gold == NO_RELATION:
                assert predictions[query] == NO_RELATION

    def test_unique_pair_always_wins(self, episodes_1shot):
        episode = episodes_1shot[0]
        rng = random.Random(1)
        for _ in range(20):
            predictions = dict(baseline_predict(episode, [], rng))
            for query in episode.queries:
                if query.gold == "rel:acquired":
                    assert predictions[query] == "rel:acquired"

    def test_weighted_sampling_proportions(self, episodes_1shot, data_dir):
        # person-organization queries choose between the two compatible
        # relations 1:1 without background, and 1:1:1 with a matching
        # background sentence adding no_relation mass
        episode = episodes_1shot[0]
        background = load_background(data_dir / "background.json")
        rng = random.Random(99)
        counts = Counter()
        draws = 20000
        target = next(q for q in episode.queries if q.gold == "rel:founded")
        for _ in range(draws):
            predictions = dict(baseline_predict(episode, background, rng))
            counts[predictions[target]] += 1
        for label in ("rel:founded", "rel:joined", NO_RELATION):
            assert abs(counts[label] / draws - 1 / 3) < 0.03, counts

    def test_seeded_determinism(self, episodes_1shot):
        episode = episodes_1shot[0]
        a = baseline_predict(episode, [], random.Random(5))
        b = baseline_predict(episode, [], random.Random(5))
        assert [p for _, p in a] == [p for _, p in b]


class TestMicroF1:
    def test_perfect(self):
        assert micro_f1(["a", "b"], ["a", "b"], {"a", "b"}) == 1.0

    def test_all_no_relation_predictions(self):
        assert micro_f1([NO_RELATION, NO_RELATION], ["a", "b"], {"a", "b"}) == 0.0

    def test_half(self):
        # TP=1 (a/a), FP=1 (b predicted for gold no_relation), FN=1 (miss on b)
        predictions = ["a", "b", NO_RELATION]
        golds = ["a", NO_RELATION, "b"]
        assert micro_f1(predictions, golds, {"a", "b"}) == pytest.approx(0.5)

    def test_no_relation_never_counts_as_target(self):
        predictions = [NO_RELATION, "a"]
        golds = [NO_RELATION, "a"]
        assert micro_f1(predictions, golds, {"a"}) == 1.0
