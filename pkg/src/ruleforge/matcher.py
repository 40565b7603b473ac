"""Pattern execution over annotated sentences.

Span matching is anchored at both ends: a pattern matches a span when it can
consume exactly the tokens inside it, nothing before and nothing after.
Sentence scanning is greedy leftmost-longest and never records zero-length
matches, so a match set is always a set of non-overlapping, non-empty spans.

Quantifier repetitions must each consume at least one token; a child that
can itself match the empty sequence contributes at most one empty
consumption, which rules out infinite loops on inputs like ([word=x]?)*.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .corpus import AnnotatedSentence, Span, Specification, Token
from .errors import RuleforgeError
from .pattern import (
    Alternation,
    And,
    Concat,
    ConstraintHole,
    ConstraintNode,
    FieldIs,
    Hole,
    Not,
    Or,
    PatternNode,
    Quantified,
    State,
    TokenPattern,
    Wildcard,
    intern_node,
    is_complete,
)


class IncompletePatternError(RuleforgeError):
    """An operation that needs a complete pattern was given one with holes."""


@dataclass(frozen=True, slots=True)
class MatchSet:
    """Spans one pattern matched in one sentence, in position order."""

    spans: tuple[Span, ...]

    def as_set(self) -> frozenset[Span]:
        return frozenset(self.spans)

    def __iter__(self):
        return iter(self.spans)

    def __len__(self) -> int:
        return len(self.spans)

    def __contains__(self, span: Span) -> bool:
        return span in self.spans


def require_complete(pattern: PatternNode) -> None:
    if not is_complete(pattern):
        raise IncompletePatternError("pattern contains holes")


def constraint_matches(constraint: ConstraintNode, token: Token) -> bool:
    if isinstance(constraint, Wildcard):
        return True
    if isinstance(constraint, FieldIs):
        return token.get(constraint.field) == constraint.value
    if isinstance(constraint, Not):
        return not constraint_matches(constraint.child, token)
    if isinstance(constraint, And):
        return constraint_matches(constraint.left, token) and constraint_matches(
            constraint.right, token
        )
    if isinstance(constraint, Or):
        return constraint_matches(constraint.left, token) or constraint_matches(
            constraint.right, token
        )
    if isinstance(constraint, ConstraintHole):
        raise IncompletePatternError("pattern contains holes")
    raise IncompletePatternError(f"cannot evaluate constraint {constraint!r}")


@lru_cache(maxsize=1 << 16)
def _ends(pattern: PatternNode, sentence: AnnotatedSentence, start: int) -> frozenset[int]:
    """All positions the pattern can consume up to when starting at `start`."""
    if isinstance(pattern, TokenPattern):
        if start < len(sentence) and constraint_matches(pattern.constraint, sentence.tokens[start]):
            return frozenset((start + 1,))
        return frozenset()
    if isinstance(pattern, Concat):
        out: set[int] = set()
        for middle in _ends(pattern.left, sentence, start):
            out |= _ends(pattern.right, sentence, middle)
        return frozenset(out)
    if isinstance(pattern, Alternation):
        return _ends(pattern.left, sentence, start) | _ends(pattern.right, sentence, start)
    if isinstance(pattern, Quantified):
        one = _ends(pattern.child, sentence, start)
        if pattern.quant == "?":
            return frozenset({start}) | one
        # closure over repetitions that each consume at least one token
        reached = {m for m in one if m > start}
        frontier = set(reached)
        while frontier:
            nxt = set()
            for m in frontier:
                for m2 in _ends(pattern.child, sentence, m):
                    if m2 > m and m2 not in reached:
                        reached.add(m2)
                        nxt.add(m2)
            frontier = nxt
        if pattern.quant == "*":
            return frozenset(reached | {start})
        # "+": the single allowed empty consumption applies when the child
        # itself matches the empty sequence
        if start in one:
            reached.add(start)
        return frozenset(reached)
    if isinstance(pattern, Hole):
        raise IncompletePatternError("pattern contains holes")
    raise IncompletePatternError(f"cannot execute pattern {pattern!r}")


def matches_exact(pattern: PatternNode, sentence: AnnotatedSentence, span: Span) -> bool:
    """True when the pattern consumes exactly the tokens in `span`."""
    require_complete(pattern)
    if span.end > len(sentence):
        raise RuleforgeError(f"span [{span.start},{span.end}) out of range for '{sentence.id}'")
    return span.end in _ends(pattern, sentence, span.start)


def find_matches(pattern: PatternNode, sentence: AnnotatedSentence) -> MatchSet:
    """Greedy leftmost-longest scan over one sentence.

    From position i, take the longest non-empty exact match and continue at
    its end; with no match, move one token right. Zero-length matches are
    never recorded.
    """
    require_complete(pattern)
    spans: list[Span] = []
    i = 0
    n = len(sentence)
    while i < n:
        longest = -1
        for j in _ends(pattern, sentence, i):
            if j > i and j > longest:
                longest = j
        if longest > i:
            spans.append(Span(i, longest))
            i = longest
        else:
            i += 1
    return MatchSet(tuple(spans))


def check_spec(pattern: PatternNode, spec: Specification) -> bool:
    """True when the pattern's match set equals the selections of every
    entry, which makes empty-selection entries require an empty match set."""
    require_complete(pattern)
    for entry in spec.entries:
        if find_matches(pattern, entry.sentence).as_set() != entry.selections:
            return False
    return True


# ---------------------------------------------------------------------------
# Least restrictive completion and pruning.
#
# Completing a constraint under negation flips what "least restrictive"
# means, so completion tracks an upper bound (matches a superset of any
# completion) and a lower bound (subset of any completion) and negation
# swaps them. _ALWAYS and _NEVER mark constraints equivalent to "any token"
# and "no token".
# ---------------------------------------------------------------------------

_ALWAYS = object()
_NEVER = object()


def _upper(constraint: ConstraintNode):
    if isinstance(constraint, ConstraintHole):
        return _ALWAYS
    if isinstance(constraint, Not):
        return _negate(_lower(constraint.child))
    if isinstance(constraint, And):
        return _conj(_upper(constraint.left), _upper(constraint.right))
    if isinstance(constraint, Or):
        return _disj(_upper(constraint.left), _upper(constraint.right))
    return constraint


def _lower(constraint: ConstraintNode):
    if isinstance(constraint, ConstraintHole):
        return _NEVER
    if isinstance(constraint, Not):
        return _negate(_upper(constraint.child))
    if isinstance(constraint, And):
        return _conj(_lower(constraint.left), _lower(constraint.right))
    if isinstance(constraint, Or):
        return _disj(_lower(constraint.left), _lower(constraint.right))
    return constraint


def _negate(bound):
    if bound is _ALWAYS:
        return _NEVER
    if bound is _NEVER:
        return _ALWAYS
    return intern_node(Not(bound))


def _conj(a, b):
    if a is _NEVER or b is _NEVER:
        return _NEVER
    if a is _ALWAYS:
        return b
    if b is _ALWAYS:
        return a
    return intern_node(And(a, b))


def _disj(a, b):
    if a is _ALWAYS or b is _ALWAYS:
        return _ALWAYS
    if a is _NEVER:
        return b
    if b is _NEVER:
        return a
    return intern_node(Or(a, b))


def _materialize(bound) -> ConstraintNode:
    if bound is _ALWAYS:
        return intern_node(Wildcard())
    if bound is _NEVER:
        return intern_node(Not(Wildcard()))
    return bound


@lru_cache(maxsize=1 << 14)
def _complete_pattern(pattern: PatternNode) -> PatternNode:
    if is_complete(pattern):
        return pattern
    if isinstance(pattern, Hole):
        return intern_node(Quantified(TokenPattern(Wildcard()), "*"))
    if isinstance(pattern, TokenPattern):
        return intern_node(TokenPattern(_materialize(_upper(pattern.constraint))))
    if isinstance(pattern, Concat):
        return intern_node(Concat(_complete_pattern(pattern.left), _complete_pattern(pattern.right)))
    if isinstance(pattern, Alternation):
        return intern_node(
            Alternation(_complete_pattern(pattern.left), _complete_pattern(pattern.right))
        )
    if isinstance(pattern, Quantified):
        completed = _complete_pattern(pattern.child)
        if isinstance(completed, Quantified):
            # folding the repetitions is the permissive reading and avoids
            # stacking quantifiers
            return intern_node(Quantified(completed.child, "*"))
        return intern_node(Quantified(completed, pattern.quant))
    raise IncompletePatternError(f"cannot complete pattern {pattern!r}")


def least_restrictive_completion(state: State | PatternNode) -> PatternNode:
    """Most permissive complete rule reachable from a state.

    Pattern-level holes become zero-or-more unrestricted tokens and
    constraint-level holes become the wildcard; a negation whose subtree
    still has a hole collapses to the wildcard, since the negated part
    could still be completed to match nothing.
    """
    pattern = state.pattern if isinstance(state, State) else state
    return _complete_pattern(pattern)


def prune_check(state: State | PatternNode, spec: Specification) -> bool:
    """True when the state cannot lead to a rule covering every highlight.

    Entries with empty selections never prune: matching too much can still
    be fixed by later constraint expansions.
    """
    completion = least_restrictive_completion(state)
    for entry in spec.entries:
        for span in entry.ordered_selections:
            if not matches_exact(completion, entry.sentence, span):
                return True
    return False
