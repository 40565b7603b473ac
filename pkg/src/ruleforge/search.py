"""Enumerative rule synthesis with branch-and-bound flavor.

One global max-priority queue holds every open state; the loop pops the
best state regardless of where it sits in the search tree, tests complete
states against the specification, expands incomplete ones, drops children
whose least restrictive completion can no longer cover the highlights, and
pushes the scored survivors. Scores attach at push time and states are
never rescored; ties break in insertion order, so a run is fully
deterministic for a fixed (spec, scorer, config).
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

from .corpus import Specification
from .errors import RuleforgeError
from .matcher import check_spec, prune_check
from .pattern import PatternNode, State, expansions, is_complete, print_pattern
from .scoring import CostTable, Scorer


class ScorerError(RuleforgeError):
    """A scorer raised while scoring; carries the state being expanded."""

    def __init__(self, message: str, state: State | None = None):
        super().__init__(message)
        self.state = state


@dataclass
class SearchConfig:
    max_states: int = 1000
    pruning_enabled: bool = True
    record_trace: bool = False
    costs: CostTable | None = None
    # printed rules the caller already rejected; they are skipped as
    # solutions but still explored (the interactive refine loop uses this)
    reject: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.max_states < 1:
            raise RuleforgeError("max_states must be at least 1")
        self.reject = frozenset(self.reject)


@dataclass
class SearchReport:
    rule: PatternNode | None
    found: bool
    states_explored: int
    states_pruned: int
    queue_peak: int
    trace: list[tuple[int, str, float]] | None = None

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "rule": print_pattern(self.rule) if self.rule is not None else None,
            "statesExplored": self.states_explored,
            "statesPruned": self.states_pruned,
            "queuePeak": self.queue_peak,
        }


def synthesize(
    spec: Specification,
    scorer: Scorer,
    config: SearchConfig | None = None,
    trace_hook=None,
) -> SearchReport:
    """Search for a rule whose match set equals every entry's selections.

    The queue seeds with the bare hole at score 0. Each iteration pops the
    max-score state and counts it as explored; a complete state that passes
    check_spec ends the search, any other complete state is discarded.
    Children of incomplete states are scored per entry and averaged.
    Exhausting the budget or the queue returns found=False, which is a
    result, not an error.
    """
    config = config or SearchConfig()
    costs = config.costs
    root = State.initial(costs)

    heap: list[tuple[float, int, State]] = [(-0.0, 0, root)]
    counter = 1
    explored = 0
    pruned = 0
    peak = 1
    trace: list[tuple[int, str, float]] | None = [] if config.record_trace else None
    entries = spec.entries

    while heap and explored < config.max_states:
        neg_score, _, state = heapq.heappop(heap)
        explored += 1
        if trace is not None or trace_hook is not None:
            printed = print_pattern(state.pattern)
            if trace is not None:
                trace.append((explored, printed, -neg_score))
            if trace_hook is not None:
                trace_hook(explored, printed, -neg_score)

        if is_complete(state.pattern):
            if check_spec(state.pattern, spec) and print_pattern(state.pattern) not in config.reject:
                return SearchReport(state.pattern, True, explored, pruned, peak, trace)
            continue

        children = expansions(state, spec, costs)
        if config.pruning_enabled:
            kept = [c for c in children if not prune_check(c, spec)]
            pruned += len(children) - len(kept)
            children = kept
        if not children:
            continue

        totals = [0.0] * len(children)
        for entry in entries:
            try:
                batch = scorer.score_batch(state, children, entry)
            except RuleforgeError:
                raise
            except Exception as exc:
                raise ScorerError(
                    f"scorer failed while expanding {print_pattern(state.pattern)}: {exc}",
                    state,
                ) from exc
            for i, s in enumerate(batch):
                totals[i] += s
        denom = len(entries)
        for child, total in zip(children, totals):
            heapq.heappush(heap, (-(total / denom), counter, child))
            counter += 1
        if len(heap) > peak:
            peak = len(heap)

    return SearchReport(None, False, explored, pruned, peak, trace)
