"""Scorer backed by an external HTTP service.

The wire protocol batches one expansion's siblings per request:

    POST <endpoint>
    {"current": "<printed state>", "candidates": ["<printed>", ...],
     "entry": {"sentence": {...}, "selections": [[s, e], ...]}}

    -> {"scores": [<number>, ...]}   (one score per candidate, same order)

Transport failures and malformed replies surface as scorer errors so the
search can report the offending state.
"""
from __future__ import annotations

import json
import urllib.error
import urllib.request

from ..corpus import SpecEntry, entry_to_json
from ..pattern import State, print_pattern
from ..scoring import Scorer
from ..search import ScorerError


class RemoteScorer(Scorer):
    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def score_transition(self, current: State, candidate: State, entry: SpecEntry) -> float:
        return self.score_batch(current, [candidate], entry)[0]

    def score_batch(self, current: State, candidates, entry: SpecEntry) -> list[float]:
        payload = {
            "current": print_pattern(current.pattern),
            "candidates": [print_pattern(c.pattern) for c in candidates],
            "entry": entry_to_json(entry),
        }
        request = urllib.request.Request(
            self.endpoint,
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise ScorerError(f"remote scorer at {self.endpoint} failed: {exc}") from exc
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(candidates):
            raise ScorerError(
                f"remote scorer returned {len(scores) if isinstance(scores, list) else 'no'} "
                f"scores for {len(candidates)} candidates"
            )
        return [float(s) for s in scores]
