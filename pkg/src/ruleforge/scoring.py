"""Scoring strategies that rank candidate expansion states.

Three scorers share one contract: score_transition(current, candidate,
entry) returns a number, higher is better, and equal inputs always give
equal outputs.

* StaticScorer: negated sum of hand-tuned per-node costs. Cheap, but blind
  to the specification and penalizes long rules by construction.
* AugmentedStaticScorer: static cost plus a reward for how much of the
  highlighted text the candidate's hole-free prefix already matches.
* ContextualScorer: logistic model over hashed features of the current
  state, the candidate state, and the segment-tagged specification text.

The contextual model trains on oracle derivations produced by the selfsup
module, with a three-stage curriculum and a triangular cyclical learning
rate. Features hash with 64-bit FNV-1a, so models are portable across runs
and machines.
"""
from __future__ import annotations

import base64
import json
import math
import random
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .corpus import SpecEntry, Specification
from .errors import RuleforgeError
from .matcher import find_matches
from .pattern import (
    Alternation,
    And,
    Concat,
    ConstraintHole,
    FieldIs,
    Hole,
    Node,
    Not,
    Or,
    PatternNode,
    Quantified,
    State,
    TokenPattern,
    Wildcard,
    flatten_concat,
    concat_chain,
    is_complete,
    iter_nodes,
    linearize_ast,
)


class ScoringError(RuleforgeError):
    pass


# ---------------------------------------------------------------------------
# Static costs.
# ---------------------------------------------------------------------------

DEFAULT_NODE_COSTS = {
    "hole": 1.0,
    "token": 1.0,
    "concat": 1.0,
    "alternation": 2.0,
    "quant?": 2.0,
    "quant*": 3.0,
    "quant+": 3.0,
    "and": 2.0,
    "or": 2.0,
    "not": 5.0,
    "wildcard": 4.0,
}

DEFAULT_FIELD_COSTS = {"word": 1.0, "lemma": 1.2, "tag": 1.5, "entity": 1.5}


@dataclass(frozen=True)
class CostTable:
    """Per-node and per-field costs for the static scorer.

    Negation is deliberately priced above every field test: exploring what a
    constraint must NOT be touches the whole vocabulary, so it should sit
    deep in the queue.
    """

    per_node: dict = field(default_factory=lambda: dict(DEFAULT_NODE_COSTS))
    per_field: dict = field(default_factory=lambda: dict(DEFAULT_FIELD_COSTS))

    def __post_init__(self) -> None:
        for table, defaults in ((self.per_node, DEFAULT_NODE_COSTS), (self.per_field, DEFAULT_FIELD_COSTS)):
            for key in defaults:
                if key not in table:
                    raise ScoringError(f"cost table missing entry '{key}'")
                if table[key] < 0:
                    raise ScoringError(f"cost '{key}' must be non-negative")
        if self.per_node["not"] <= max(self.per_field.values()):
            raise ScoringError("negation must cost strictly more than any field test")

    @staticmethod
    def default() -> "CostTable":
        return _DEFAULT_COSTS

    def with_overrides(self, overrides: dict) -> "CostTable":
        """Apply a {"costs": {...}} style mapping; keys may name nodes or fields."""
        per_node = dict(self.per_node)
        per_field = dict(self.per_field)
        for key, value in overrides.items():
            key = key.lower()
            if key in per_node:
                per_node[key] = float(value)
            elif key in per_field:
                per_field[key] = float(value)
            else:
                raise ScoringError(f"unknown cost key '{key}'")
        return CostTable(per_node, per_field)

    def scaled(self, factor: float) -> "CostTable":
        return CostTable(
            {k: v * factor for k, v in self.per_node.items()},
            {k: v * factor for k, v in self.per_field.items()},
        )


_DEFAULT_COSTS = CostTable()


def _node_price(node: Node, node_costs: dict, field_costs: dict) -> float:
    if isinstance(node, (Hole, ConstraintHole)):
        return node_costs["hole"]
    if isinstance(node, TokenPattern):
        return node_costs["token"]
    if isinstance(node, Concat):
        return node_costs["concat"]
    if isinstance(node, Alternation):
        return node_costs["alternation"]
    if isinstance(node, Quantified):
        return node_costs["quant" + node.quant]
    if isinstance(node, Wildcard):
        return node_costs["wildcard"]
    if isinstance(node, FieldIs):
        return field_costs[node.field]
    if isinstance(node, Not):
        return node_costs["not"]
    if isinstance(node, And):
        return node_costs["and"]
    if isinstance(node, Or):
        return node_costs["or"]
    raise ScoringError(f"cannot price node {node!r}")


def static_cost(pattern: Node, costs: CostTable | None = None) -> float:
    """Sum of per-node costs over the whole tree, holes included."""
    t = costs if costs is not None else _DEFAULT_COSTS
    node_costs = t.per_node
    field_costs = t.per_field
    return sum(_node_price(node, node_costs, field_costs) for node in iter_nodes(pattern))


# ---------------------------------------------------------------------------
# Score augmentation: reward for what the hole-free part already matches.
# ---------------------------------------------------------------------------


def strip_holes(pattern: PatternNode) -> PatternNode | None:
    """Drop every component that still contains a hole.

    For a concatenation this keeps the longest hole-free prefix, which is
    the part whose matches are already meaningful; any other root that
    contains a hole leaves nothing usable.
    """
    if is_complete(pattern):
        return pattern
    if isinstance(pattern, Concat):
        keep = []
        for part in flatten_concat(pattern):
            if not is_complete(part):
                break
            keep.append(part)
        if not keep:
            return None
        return concat_chain(keep)
    return None


@lru_cache(maxsize=1 << 14)
def _reward(pattern: PatternNode, entry: SpecEntry) -> int:
    stripped = strip_holes(pattern)
    if stripped is None:
        return 0
    highlighted = entry.highlighted
    reward = 0
    for span in find_matches(stripped, entry.sentence):
        for i in range(span.start, span.end):
            reward += 1 if i in highlighted else -1
    return reward


def augmentation_reward(state: State | PatternNode, entry: SpecEntry) -> int:
    """+1 per matched token inside a highlight, -1 per matched token outside,
    using the stripped (hole-free) part of the state's pattern."""
    return _reward(pattern_of(state), entry)


def pattern_of(obj) -> PatternNode:
    if isinstance(obj, State):
        return obj.pattern
    if isinstance(obj, PatternNode):
        return obj
    raise ScoringError(f"expected a state or pattern, got {obj!r}")


# ---------------------------------------------------------------------------
# Scorer contract.
# ---------------------------------------------------------------------------


class Scorer:
    """Scores a (current state, candidate state, spec entry) transition."""

    def score_transition(self, current: State, candidate: State, entry: SpecEntry) -> float:
        raise NotImplementedError

    def score_batch(self, current: State, candidates, entry: SpecEntry) -> list[float]:
        """Score sibling candidates against one entry. The default just
        loops; remote or vectorized scorers override this."""
        return [self.score_transition(current, c, entry) for c in candidates]


def score_transition_multi(
    scorer: Scorer, current: State, candidate: State, spec: Specification
) -> float:
    """Arithmetic mean of the per-entry transition scores."""
    scores = [scorer.score_transition(current, candidate, entry) for entry in spec.entries]
    return sum(scores) / len(scores)


class StaticScorer(Scorer):
    """Score = negated pattern cost. States carry their cost under the
    active table, so candidates built by the expansion step score for free;
    anything else prices the tree on the spot."""

    def __init__(self, costs: CostTable | None = None):
        self.costs = costs if costs is not None else CostTable.default()

    def _cost(self, candidate) -> float:
        if isinstance(candidate, State):
            return candidate.static_cost
        return static_cost(candidate, self.costs)

    def score_transition(self, current: State, candidate: State, entry: SpecEntry) -> float:
        return -self._cost(candidate)


class AugmentedStaticScorer(StaticScorer):
    def __init__(self, costs: CostTable | None = None, reward_weight: float = 1.0):
        super().__init__(costs)
        self.reward_weight = reward_weight

    def score_transition(self, current: State, candidate: State, entry: SpecEntry) -> float:
        return -self._cost(candidate) + self.reward_weight * augmentation_reward(candidate, entry)


# ---------------------------------------------------------------------------
# Hashed features. Segment ids: 1 current state, 2 candidate state,
# 3 highlighted spec tokens, 4 the rest of the spec sentence. Feature
# strings hash with FNV-1a 64 and reduce modulo the (power of two) width.
# ---------------------------------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


_hash_cache: dict[str, int] = {}


def _feature_hash(feature: str) -> int:
    h = _hash_cache.get(feature)
    if h is None:
        if len(_hash_cache) > 2_000_000:
            _hash_cache.clear()
        h = fnv1a64(feature.encode("utf-8"))
        _hash_cache[feature] = h
    return h


def _check_dim(dim: int) -> None:
    if dim <= 0 or dim & (dim - 1):
        raise ScoringError(f"feature dimension must be a power of two, got {dim}")


@lru_cache(maxsize=1 << 15)
def _state_indices(pattern: PatternNode, segment: int, dim: int) -> tuple[int, ...]:
    """Unigram and bigram symbol features of one linearized state."""
    mask = dim - 1
    symbols = linearize_ast(pattern)
    prefix_u = f"{segment}u:"
    prefix_b = f"{segment}b:"
    out = [_feature_hash(prefix_u + s) & mask for s in symbols]
    out.extend(
        _feature_hash(f"{prefix_b}{a}|{b}") & mask for a, b in zip(symbols, symbols[1:])
    )
    return tuple(out)


@lru_cache(maxsize=1 << 13)
def _entry_indices(entry: SpecEntry, dim: int) -> tuple[int, ...]:
    """Per-token field=value features, segment 3 inside highlights, 4 outside."""
    mask = dim - 1
    highlighted = entry.highlighted
    out = []
    for i, token in enumerate(entry.sentence.tokens):
        segment = 3 if i in highlighted else 4
        for field_name in ("word", "lemma", "tag", "entity"):
            out.append(_feature_hash(f"{segment}:{field_name}={token.get(field_name)}") & mask)
    return tuple(out)


@lru_cache(maxsize=1 << 13)
def _entry_highlight_values(entry: SpecEntry) -> tuple[str, ...]:
    values = []
    for span in entry.ordered_selections:
        for i in range(span.start, span.end):
            token = entry.sentence.tokens[i]
            for field_name in ("word", "lemma", "tag", "entity"):
                values.append(f"{field_name}={token.get(field_name)}")
    return tuple(values)


@lru_cache(maxsize=1 << 16)
def _symbol_cross_indices(symbol: str, entry: SpecEntry, dim: int) -> tuple[int, ...]:
    mask = dim - 1
    return tuple(
        _feature_hash(f"x:{symbol}~{value}") & mask for value in _entry_highlight_values(entry)
    )


@lru_cache(maxsize=1 << 15)
def _candidate_symbols(pattern: PatternNode) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for symbol in linearize_ast(pattern):
        seen.setdefault(symbol)
    return tuple(seen)


def _cross_indices(pattern: PatternNode, entry: SpecEntry, dim: int) -> list[int]:
    out: list[int] = []
    for symbol in _candidate_symbols(pattern):
        out.extend(_symbol_cross_indices(symbol, entry, dim))
    return out


def _all_indices(current: PatternNode, candidate: PatternNode, entry: SpecEntry, dim: int) -> list[int]:
    out = list(_state_indices(current, 1, dim))
    out.extend(_state_indices(candidate, 2, dim))
    out.extend(_entry_indices(entry, dim))
    out.extend(_cross_indices(candidate, entry, dim))
    return out


def featurize(current, candidate, entry: SpecEntry, dim: int) -> dict[int, float]:
    """Sparse hashed feature counts for one scored transition.

    Deterministic for equal inputs; swapping current and candidate changes
    the vector because their symbols live in different segments.
    """
    _check_dim(dim)
    vector: dict[int, float] = {}
    for index in _all_indices(pattern_of(current), pattern_of(candidate), entry, dim):
        vector[index] = vector.get(index, 0.0) + 1.0
    return vector


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-min(z, 500.0)))
    ez = math.exp(max(z, -500.0))
    return ez / (1.0 + ez)


# ---------------------------------------------------------------------------
# The trainable model.
# ---------------------------------------------------------------------------

MODEL_VERSION = 1


@dataclass
class ScorerModel:
    """Hashed-feature logistic model: sigmoid(weights . features + bias)."""

    dim: int
    weights: np.ndarray
    bias: float = 0.0
    version: int = MODEL_VERSION
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.dim,):
            raise ScoringError(f"weight vector must have shape ({self.dim},)")
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ScoringError("model weights must be finite")

    @staticmethod
    def zeros(dim: int) -> "ScorerModel":
        return ScorerModel(dim=dim, weights=np.zeros(dim, dtype=np.float64))

    def save(self, path) -> None:
        payload = {
            "version": self.version,
            "dim": self.dim,
            "bias": self.bias,
            "weights": base64.b64encode(self.weights.astype("<f8").tobytes()).decode("ascii"),
            "trainingMeta": self.training_meta,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, separators=(",", ":"))
            fh.write("\n")

    @staticmethod
    def load(path) -> "ScorerModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        version = payload.get("version")
        if version != MODEL_VERSION:
            raise ScoringError(f"unsupported model version {version!r}")
        dim = int(payload["dim"])
        raw = payload["weights"]
        if isinstance(raw, str):
            weights = np.frombuffer(base64.b64decode(raw), dtype="<f8").astype(np.float64)
        else:
            weights = np.asarray(raw, dtype=np.float64)
        return ScorerModel(
            dim=dim,
            weights=weights,
            bias=float(payload.get("bias", 0.0)),
            version=version,
            training_meta=payload.get("trainingMeta", {}),
        )


def contextual_score(model: ScorerModel, features: dict[int, float]) -> float:
    """Probability-shaped score in (0, 1)."""
    z = model.bias
    weights = model.weights
    for index, value in features.items():
        z += weights[index] * value
    return sigmoid(z)


class ContextualScorer(Scorer):
    """Scores with the logistic model. Partial weight sums are memoized per
    scorer instance (the model is immutable), which makes scoring a batch of
    siblings against several entries cheap."""

    _CACHE_LIMIT = 1 << 17

    def __init__(self, model: ScorerModel):
        self.model = model
        self._seg1_sum: dict = {}
        self._seg2_sum: dict = {}
        self._entry_sum: dict = {}
        self._symbol_sum: dict = {}

    def _gather(self, indices) -> float:
        if not indices:
            return 0.0
        return float(self.model.weights[np.fromiter(indices, dtype=np.int64)].sum())

    def _cached(self, cache: dict, key, compute) -> float:
        value = cache.get(key)
        if value is None:
            if len(cache) > self._CACHE_LIMIT:
                cache.clear()
            value = compute()
            cache[key] = value
        return value

    def _cross_sum(self, pattern: PatternNode, entry: SpecEntry) -> float:
        dim = self.model.dim
        total = 0.0
        for symbol in _candidate_symbols(pattern):
            total += self._cached(
                self._symbol_sum,
                (symbol, entry),
                lambda s=symbol: self._gather(_symbol_cross_indices(s, entry, dim)),
            )
        return total

    def score_transition(self, current: State, candidate: State, entry: SpecEntry) -> float:
        return self.score_batch(current, [candidate], entry)[0]

    def score_batch(self, current: State, candidates, entry: SpecEntry) -> list[float]:
        dim = self.model.dim
        current_pattern = pattern_of(current)
        base = self.model.bias
        base += self._cached(
            self._seg1_sum,
            current_pattern,
            lambda: self._gather(_state_indices(current_pattern, 1, dim)),
        )
        base += self._cached(
            self._entry_sum, entry, lambda: self._gather(_entry_indices(entry, dim))
        )
        scores = []
        for candidate in candidates:
            pattern = pattern_of(candidate)
            z = base
            z += self._cached(
                self._seg2_sum, pattern, lambda: self._gather(_state_indices(pattern, 2, dim))
            )
            z += self._cross_sum(pattern, entry)
            scores.append(sigmoid(z))
        return scores


# ---------------------------------------------------------------------------
# Training.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainingExample:
    """One labeled sibling from an oracle derivation step, paired with one
    spec entry; label 1 marks the sibling on the derivation path."""

    entry: SpecEntry
    current: PatternNode
    candidate: PatternNode
    label: int
    item: int = 0
    step: int = 0


@dataclass
class TrainConfig:
    dim: int = 1 << 18
    seed: int = 1
    lr_low: float = 6e-6
    lr_high: float = 3e-5
    # the rate bounds target a much larger model class; this linear model
    # needs a bigger effective step, hence the multiplier. Much larger
    # values saturate the sigmoid and destroy ranking resolution.
    lr_scale: float = 2000.0
    stage_epochs: tuple[int, int, int] = (3, 2, 1)


_STAGES = (
    ("easy", 20, 5),
    ("medium", 30, 7),
    ("full", None, None),
)


def _stage_filter(examples, max_tokens, max_highlight):
    if max_tokens is None:
        return list(examples)
    out = []
    for ex in examples:
        if len(ex.entry.sentence) < max_tokens and len(ex.entry.highlighted) < max_highlight:
            out.append(ex)
    return out


def _cyclical_lr(step: int, total: int, low: float, high: float) -> float:
    """Triangular schedule with halving peaks, two cycles over the stage."""
    if total <= 1:
        return low
    cycle_len = max(2, total // 2)
    cycle, pos = divmod(step, cycle_len)
    half = cycle_len / 2.0
    frac = 1.0 - abs(pos - half) / half
    peak = low + (high - low) * (0.5 ** cycle)
    return low + (peak - low) * max(0.0, frac)


def train_contextual(dataset, config: TrainConfig | None = None) -> ScorerModel:
    """Plain SGD on the logistic loss over a three-stage curriculum.

    Stage one sees only short sentences with small highlights, stage two
    relaxes both limits, stage three is one pass over everything.
    Deterministic for a fixed config seed.
    """
    config = config or TrainConfig()
    _check_dim(config.dim)
    dataset = list(dataset)
    weights = np.zeros(config.dim, dtype=np.float64)
    bias = 0.0
    low = config.lr_low * config.lr_scale
    high = config.lr_high * config.lr_scale
    rng = random.Random(f"train:{config.seed}")
    meta_stages = []

    for stage_index, (name, max_tokens, max_highlight) in enumerate(_STAGES):
        epochs = config.stage_epochs[stage_index]
        subset = _stage_filter(dataset, max_tokens, max_highlight)
        meta_stages.append({"stage": name, "examples": len(subset), "epochs": epochs})
        if not subset:
            warnings.warn(f"curriculum stage '{name}' has no examples; skipping")
            continue
        total = len(subset) * epochs
        step = 0
        order = list(range(len(subset)))
        for _epoch in range(epochs):
            rng.shuffle(order)
            for index in order:
                ex = subset[index]
                idx = np.fromiter(
                    _all_indices(ex.current, ex.candidate, ex.entry, config.dim),
                    dtype=np.int64,
                )
                z = bias + float(weights[idx].sum())
                gradient = sigmoid(z) - ex.label
                lr = _cyclical_lr(step, total, low, high)
                np.add.at(weights, idx, -lr * gradient)
                bias -= lr * gradient
                step += 1

    meta = {
        "seed": config.seed,
        "lrLow": config.lr_low,
        "lrHigh": config.lr_high,
        "lrScale": config.lr_scale,
        "stages": meta_stages,
        "examples": len(dataset),
    }
    return ScorerModel(dim=config.dim, weights=weights, bias=bias, training_meta=meta)


def cross_entropy(model: ScorerModel, examples) -> float:
    """Mean logistic loss; 0.693 is the chance level."""
    examples = list(examples)
    if not examples:
        raise ScoringError("cannot evaluate on an empty example list")
    total = 0.0
    for ex in examples:
        p = contextual_score(model, featurize(ex.current, ex.candidate, ex.entry, model.dim))
        p = min(max(p, 1e-12), 1.0 - 1e-12)
        total += -math.log(p) if ex.label else -math.log(1.0 - p)
    return total / len(examples)


def accuracy(model: ScorerModel, examples, threshold: float = 0.5) -> float:
    examples = list(examples)
    if not examples:
        raise ScoringError("cannot evaluate on an empty example list")
    hits = 0
    for ex in examples:
        p = contextual_score(model, featurize(ex.current, ex.candidate, ex.entry, model.dim))
        hits += int((p >= threshold) == bool(ex.label))
    return hits / len(examples)
