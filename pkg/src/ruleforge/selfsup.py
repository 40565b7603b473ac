"""Self-supervised training data: rules invented from raw text, the
specifications they induce, and their shortest derivations.

The generator samples a corpus span, turns each token into a field
constraint, optionally grafts one alternation and one quantifier (each kept
only when the corpus shows they add coverage), and collects matching
sentences into a specification. An oracle then replays the unique top-down
leftmost derivation of the rule, which is minimal because every expansion
step introduces exactly one node of the final tree. Each derivation step
yields one positive sibling and many negative siblings for scorer training;
the derivation length is also the search-step floor ("ceiling") used by the
intrinsic evaluation.

Generated rules only use word/lemma/tag constraints, alternation, and
quantifiers; negation and conjunction never appear in training rules even
though the search grammar can produce them.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .corpus import (
    AnnotatedSentence,
    Span,
    SpecEntry,
    SpecMode,
    Specification,
    canonical_dumps,
    entry_to_json,
    query_corpus,
    sentence_from_json,
    spec_from_json,
    spec_to_json,
)
from .errors import RuleforgeError
from .matcher import check_spec, constraint_matches, find_matches
from .pattern import (
    Alternation,
    And,
    Concat,
    ConstraintHole,
    FieldIs,
    Hole,
    Not,
    Or,
    PatternNode,
    Quantified,
    State,
    TokenPattern,
    Wildcard,
    concat_chain,
    expansions,
    flatten_concat,
    is_complete,
    leftmost_hole,
    node_at,
    node_count,
    parse_pattern,
    print_pattern,
    replace_at,
)
from .scoring import CostTable, TrainingExample

GEN_FIELDS = ("word", "lemma", "tag")


class GenerationError(RuleforgeError):
    pass


class DerivationError(RuleforgeError):
    pass


@dataclass(frozen=True)
class DerivationStep:
    """One oracle move: the state before it, the index of the sibling on the
    path to the target rule, and the full ordered sibling list."""

    current: State
    chosen_index: int
    siblings: tuple[State, ...]

    @property
    def chosen(self) -> State:
        return self.siblings[self.chosen_index]


@dataclass(frozen=True)
class GeneratedItem:
    rule: PatternNode
    spec: Specification
    derivation: tuple[DerivationStep, ...]
    seed: int


@dataclass
class GenConfig:
    span_max_len: int = 7
    spec_k: int = 5
    alternation_p: float = 0.3
    quantifier_p: float = 0.3
    retries: int = 20
    costs: CostTable | None = None


def gen_base_rule(corpus, rng: random.Random, max_len: int = 7):
    """Random span turned into a concatenation of single-field constraints.

    Each token independently becomes a word, lemma, or tag test with equal
    probability. Returns (rule, source sentence, source span); the rule
    matches its source span by construction.
    """
    if not corpus:
        raise GenerationError("cannot generate rules from an empty corpus")
    sentence = rng.choice(corpus)
    length = rng.randint(1, min(max_len, len(sentence)))
    start = rng.randint(0, len(sentence) - length)
    parts = []
    for i in range(start, start + length):
        field = rng.choice(GEN_FIELDS)
        parts.append(TokenPattern(FieldIs(field, sentence.tokens[i].get(field))))
    return concat_chain(parts), sentence, Span(start, start + length)


def _chain_token_patterns(rule: PatternNode) -> list[TokenPattern] | None:
    parts = flatten_concat(rule)
    if all(isinstance(p, TokenPattern) for p in parts):
        return parts
    return None


def add_alternation(rule: PatternNode, corpus, rng: random.Random):
    """Widen one constraint into a disjunction using corpus evidence.

    Probes with a wildcard at a random position and scans for a sentence
    whose token there fails the original constraint; the first such token
    becomes the new branch. Returns (rule, witness sentence) with witness
    None when the rule is unchanged.
    """
    parts = _chain_token_patterns(rule)
    if not parts:
        return rule, None
    position = rng.randrange(len(parts))
    original = parts[position].constraint
    probe = concat_chain(
        [TokenPattern(Wildcard()) if i == position else p for i, p in enumerate(parts)]
    )
    for sentence, span in query_corpus(corpus, probe):
        if len(span) != len(parts):
            continue  # a quantified probe variant could shift widths; skip
        candidate_token = sentence.tokens[span.start + position]
        if constraint_matches(original, candidate_token):
            continue
        field = rng.choice(GEN_FIELDS)
        branch = FieldIs(field, candidate_token.get(field))
        widened = list(parts)
        widened[position] = TokenPattern(Or(original, branch))
        return concat_chain(widened), sentence
    return rule, None


def add_quantifier(rule: PatternNode, corpus, rng: random.Random) -> PatternNode:
    """Wrap one constraint in ?, *, or +, keeping the change only when the
    corpus shows it pays: ? and * must strictly grow the hit count, + must
    not shrink it and needs at least one multi-repetition witness."""
    parts = _chain_token_patterns(rule)
    if not parts:
        return rule
    position = rng.randrange(len(parts))
    quant = rng.choice(("?", "*", "+"))
    wrapped = list(parts)
    wrapped[position] = Quantified(parts[position], quant)
    candidate = concat_chain(wrapped)
    before = query_corpus(corpus, rule)
    after = query_corpus(corpus, candidate)
    if quant == "+":
        witness = any(len(span) > len(parts) for _, span in after)
        if len(after) >= len(before) and witness:
            return candidate
        return rule
    if len(after) > len(before):
        return candidate
    return rule


def build_spec(rule: PatternNode, corpus, k: int, rng: random.Random, must_include=()) -> Specification | None:
    """Specification from up to k corpus sentences the rule matches.

    Selections are the rule's own match set per sentence, so the result
    satisfies the rule by construction. Returns None when the corpus has no
    hits at all.
    """
    hits = query_corpus(corpus, rule)
    if not hits:
        return None
    hit_sentences: list[AnnotatedSentence] = []
    seen = set()
    for sentence, _span in hits:
        if sentence.id not in seen:
            seen.add(sentence.id)
            hit_sentences.append(sentence)
    chosen = {s.id: s for s in must_include if s.id in seen}
    remaining = [s for s in hit_sentences if s.id not in chosen]
    room = max(0, k - len(chosen))
    if room and remaining:
        for sentence in rng.sample(remaining, min(room, len(remaining))):
            chosen[sentence.id] = sentence
    ordered = [s for s in hit_sentences if s.id in chosen][:k]
    entries = []
    for sentence in ordered:
        selections = frozenset(find_matches(rule, sentence).as_set())
        assert selections, "a hit sentence must have a non-empty match set"
        entries.append(SpecEntry(sentence, selections))
    return Specification(tuple(entries), SpecMode.SURFACE)


# ---------------------------------------------------------------------------
# Oracle derivations.
# ---------------------------------------------------------------------------


def _target_fragment(node):
    """The expansion fragment that introduces this target node."""
    if isinstance(node, Concat):
        return Concat(Hole(), Hole())
    if isinstance(node, TokenPattern):
        return TokenPattern(ConstraintHole())
    if isinstance(node, Alternation):
        return Alternation(Hole(), Hole())
    if isinstance(node, Quantified):
        return Quantified(Hole(), node.quant)
    if isinstance(node, Wildcard):
        return Wildcard()
    if isinstance(node, FieldIs):
        return node
    if isinstance(node, Not):
        return Not(ConstraintHole())
    if isinstance(node, And):
        return And(ConstraintHole(), ConstraintHole())
    if isinstance(node, Or):
        return Or(ConstraintHole(), ConstraintHole())
    raise DerivationError(f"no expansion introduces {node!r}")


def oracle_derivation(rule: PatternNode, spec: Specification, costs: CostTable | None = None) -> list[DerivationStep]:
    """Shortest expansion sequence from the bare hole to `rule`.

    Always expands the leftmost hole and picks the sibling that introduces
    the corresponding node of the target tree; the length therefore equals
    the rule's node count, and no shorter sequence exists.
    """
    if not is_complete(rule):
        raise DerivationError("oracle target must be a complete rule")
    steps: list[DerivationStep] = []
    current = State.initial(costs)
    while not is_complete(current.pattern):
        path = leftmost_hole(current.pattern)
        target_node = node_at(rule, path)
        fragment = _target_fragment(target_node)
        expected = replace_at(current.pattern, path, fragment)
        siblings = tuple(expansions(current, spec, costs))
        chosen_index = next(
            (i for i, s in enumerate(siblings) if s.pattern == expected), None
        )
        if chosen_index is None:
            raise DerivationError(
                f"rule not derivable under spec vocabulary: needs {print_pattern(expected)}"
            )
        steps.append(DerivationStep(current, chosen_index, siblings))
        current = siblings[chosen_index]
    if current.pattern != rule:
        raise DerivationError("derivation replay drifted from the target rule")
    assert len(steps) == node_count(rule)
    return steps


def replay_derivation(derivation, spec: Specification, costs: CostTable | None = None) -> PatternNode:
    """Re-run a derivation from the bare hole, validating every step.

    Recorded siblings compare by printed form: the items file stores them as
    rule text, which flattens concatenation chains, so structural identity
    is not recoverable for non-canonical siblings. The walk itself always
    follows freshly expanded states.
    """
    current = State.initial(costs)
    for step in derivation:
        siblings = expansions(current, spec, costs)
        if [print_pattern(s.pattern) for s in siblings] != [
            print_pattern(s.pattern) for s in step.siblings
        ]:
            raise DerivationError("recorded siblings do not match the grammar")
        current = siblings[step.chosen_index]
    if not is_complete(current.pattern):
        raise DerivationError("derivation ends on an incomplete pattern")
    return current.pattern


# ---------------------------------------------------------------------------
# Dataset generation.
# ---------------------------------------------------------------------------


def _generate_one(corpus, rng: random.Random, config: GenConfig):
    rule, source, _span = gen_base_rule(corpus, rng, config.span_max_len)
    witness = None
    if rng.random() < config.alternation_p:
        rule, witness = add_alternation(rule, corpus, rng)
    if rng.random() < config.quantifier_p:
        rule = add_quantifier(rule, corpus, rng)
    must = [source] + ([witness] if witness is not None else [])
    spec = build_spec(rule, corpus, config.spec_k, rng, must_include=must)
    if spec is None:
        return None
    if not check_spec(rule, spec):
        return None
    derivation = oracle_derivation(rule, spec, config.costs)
    return rule, spec, derivation


def gen_dataset(corpus, n: int, seed: int, config: GenConfig | None = None) -> list[GeneratedItem]:
    """Generate up to n validated items; item i is driven by its own rng
    derived from (seed, i), so parallel and serial runs agree."""
    config = config or GenConfig()
    items: list[GeneratedItem] = []
    for i in range(n):
        rng = random.Random(f"{seed}:{i}")
        produced = None
        for _attempt in range(config.retries):
            try:
                produced = _generate_one(corpus, rng, config)
            except DerivationError:
                produced = None
            if produced is not None:
                break
        if produced is None:
            continue
        rule, spec, derivation = produced
        items.append(GeneratedItem(rule, spec, tuple(derivation), i))
    return items


# ---------------------------------------------------------------------------
# File formats. Items file: one header line then one JSON object per item.
# Training file: one header line then one TrainingExample per line.
# ---------------------------------------------------------------------------


def save_items(items, path, seed: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            canonical_dumps(
                {"header": True, "format": "generated-items", "version": 1, "count": len(items), "seed": seed}
            )
            + "\n"
        )
        for item in items:
            record = {
                "rule": print_pattern(item.rule),
                "spec": spec_to_json(item.spec),
                "derivation": [
                    {
                        "current": print_pattern(step.current.pattern),
                        "chosen": step.chosen_index,
                        "siblings": [print_pattern(s.pattern) for s in step.siblings],
                    }
                    for step in item.derivation
                ],
                "seed": item.seed,
            }
            fh.write(canonical_dumps(record) + "\n")


def load_items(path, costs: CostTable | None = None) -> list[GeneratedItem]:
    items: list[GeneratedItem] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.get("header"):
                if obj.get("format") != "generated-items":
                    raise GenerationError(f"unexpected items file format {obj.get('format')!r}")
                continue
            rule = parse_pattern(obj["rule"])
            spec = spec_from_json(obj["spec"])
            derivation = _rebuild_derivation(obj["derivation"], spec, costs)
            items.append(GeneratedItem(rule, spec, derivation, int(obj.get("seed", lineno))))
    return items


def _rebuild_derivation(raw_steps, spec, costs) -> tuple[DerivationStep, ...]:
    from .scoring import static_cost

    steps = []
    depth = 0
    for raw in raw_steps:
        current_pattern = parse_pattern(raw["current"])
        current = State(current_pattern, static_cost(current_pattern, costs), depth)
        siblings = tuple(
            State(parse_pattern(text), static_cost(parse_pattern(text), costs), depth + 1)
            for text in raw["siblings"]
        )
        steps.append(DerivationStep(current, int(raw["chosen"]), siblings))
        depth += 1
    return tuple(steps)


def export_training(items, path, neg_cap: int = 16, seed: int = 0) -> int:
    """Flatten derivations into labeled sibling examples, one per line.

    Every step emits its chosen sibling with label 1 and up to neg_cap
    sampled non-chosen siblings with label 0, each paired with every entry
    of the item's specification. Returns the number of examples written.
    """
    count = 0
    lines: list[str] = []
    for item in items:
        entry_jsons = [entry_to_json(entry) for entry in item.spec.entries]
        for j, step in enumerate(item.derivation):
            negatives = [s for i, s in enumerate(step.siblings) if i != step.chosen_index]
            if len(negatives) > neg_cap:
                neg_rng = random.Random(f"{seed}:{item.seed}:{j}")
                negatives = neg_rng.sample(negatives, neg_cap)
            pairs = [(step.chosen, 1)] + [(s, 0) for s in negatives]
            current_text = print_pattern(step.current.pattern)
            for candidate, label in pairs:
                candidate_text = print_pattern(candidate.pattern)
                for entry_json in entry_jsons:
                    lines.append(
                        canonical_dumps(
                            {
                                "entry": entry_json,
                                "current": current_text,
                                "candidate": candidate_text,
                                "label": label,
                                "item": item.seed,
                                "step": j,
                            }
                        )
                    )
                    count += 1
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            canonical_dumps(
                {"header": True, "format": "training-examples", "version": 1, "count": count}
            )
            + "\n"
        )
        for line in lines:
            fh.write(line + "\n")
    return count


def read_training_file(path) -> list[TrainingExample]:
    """Load exported examples; sentences dedupe by their serialized form so
    a large file shares entry objects."""
    examples: list[TrainingExample] = []
    entry_cache: dict[str, SpecEntry] = {}
    pattern_cache: dict[str, PatternNode] = {}

    def cached_pattern(text: str) -> PatternNode:
        node = pattern_cache.get(text)
        if node is None:
            node = parse_pattern(text)
            pattern_cache[text] = node
        return node

    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.get("header"):
                if obj.get("format") != "training-examples":
                    raise GenerationError(f"unexpected training file format {obj.get('format')!r}")
                continue
            key = canonical_dumps(obj["entry"])
            entry = entry_cache.get(key)
            if entry is None:
                sentence = sentence_from_json(obj["entry"]["sentence"])
                selections = frozenset(Span(s, e) for s, e in obj["entry"]["selections"])
                entry = SpecEntry(sentence, selections)
                entry_cache[key] = entry
            examples.append(
                TrainingExample(
                    entry=entry,
                    current=cached_pattern(obj["current"]),
                    candidate=cached_pattern(obj["candidate"]),
                    label=int(obj["label"]),
                    item=int(obj.get("item", 0)),
                    step=int(obj.get("step", 0)),
                )
            )
    return examples
