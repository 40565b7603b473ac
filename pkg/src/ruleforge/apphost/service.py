"""HTTP service hosting synthesis, matching, parsing, and linearization.

One process holds one immutable corpus and at most one scorer model; the
endpoints are stateless per request, so two concurrent identical requests
return identical results. A semaphore caps simultaneous synthesis jobs;
excess requests queue.

Endpoints:
  GET  /api/health       -> {"status", "modelLoaded", "corpusSize"}
  GET  /api/corpus?q=    -> {"sentences": [...]} substring search
  POST /api/parse        {"rule"} -> {"ok", "printed", "complete", "chips"}
  POST /api/match        {"rule", "sentences"|[ids]} -> {"matches": [...]}
  POST /api/linearize    {"sentence"|{"ref"}, "a": [s,e], "b": [s,e]}
  POST /api/synthesize   {"spec", "scorer", "maxStates", "trace", "reject"}

With "trace": true the synthesize response streams line-delimited JSON
trace events and finishes with the report line {"done": true, ...}.
Budget exhaustion is a normal found=false response, never an error.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from ..corpus import (
    Span,
    canonical_dumps,
    corpus_index,
    linearize_path,
    sentence_from_json,
    sentence_to_json,
    shortest_dep_path,
    span_head,
    spec_from_json,
)
from ..errors import RuleforgeError
from ..matcher import find_matches
from ..pattern import (
    Alternation,
    flatten_concat,
    is_complete,
    parse_pattern,
    print_pattern,
)
from ..scoring import ScorerModel
from ..search import SearchConfig, synthesize
from .cli import build_scorer
from .config import cost_table


class ServiceState:
    def __init__(self, corpus, model: ScorerModel | None, config: dict, static_dir=None):
        self.corpus = list(corpus)
        self.index = corpus_index(self.corpus)
        self.model = model
        self.config = config
        self.static_dir = Path(static_dir) if static_dir else None
        self.jobs = threading.Semaphore(config.get("jobCap", 4))

    def scorer(self, name: str):
        if name == "contextual":
            if self.model is None:
                raise RuleforgeError("no model loaded; start the server with --model")
            from ..scoring import ContextualScorer

            return ContextualScorer(self.model)
        return build_scorer(name, self.config)


def _rule_chips(rule) -> list[str]:
    parts = flatten_concat(rule) if not isinstance(rule, Alternation) else [rule]
    return [print_pattern(part) for part in parts]


class Handler(BaseHTTPRequestHandler):
    state: ServiceState  # injected by run_server

    # ------------------------------------------------------------------
    def log_message(self, *args) -> None:  # quiet by default
        pass

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

    def _send_json(self, payload, status: int = 200) -> None:
        body = (canonical_dumps(payload) + "\n").encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, message: str, status: int = 400, location=None) -> None:
        self._send_json({"error": message, "location": location}, status)

    def _read_body(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise RuleforgeError(f"invalid JSON body: {exc.msg}") from exc

    # ------------------------------------------------------------------
    def do_OPTIONS(self) -> None:  # CORS preflight
        self.send_response(204)
        self._cors()
        self.end_headers()

    def do_GET(self) -> None:
        url = urlparse(self.path)
        try:
            if url.path == "/api/health":
                self._send_json(
                    {
                        "status": "ok",
                        "modelLoaded": self.state.model is not None,
                        "corpusSize": len(self.state.corpus),
                    }
                )
            elif url.path == "/api/corpus":
                self._corpus_search(url)
            else:
                self._static(url.path)
        except RuleforgeError as exc:
            self._send_error_json(str(exc))

    def do_POST(self) -> None:
        url = urlparse(self.path)
        routes = {
            "/api/parse": self._parse,
            "/api/match": self._match,
            "/api/linearize": self._linearize,
            "/api/synthesize": self._synthesize,
        }
        handler = routes.get(url.path)
        if handler is None:
            self._send_error_json("unknown endpoint", 404)
            return
        try:
            body = self._read_body()
            handler(body)
        except RuleforgeError as exc:
            self._send_error_json(str(exc))
        except Exception as exc:  # pragma: no cover - last-resort guard
            self._send_error_json(f"internal error: {exc}", 500)

    # ------------------------------------------------------------------
    def _corpus_search(self, url) -> None:
        params = parse_qs(url.query)
        query = (params.get("q") or [""])[0].lower()
        limit = int((params.get("limit") or ["20"])[0])
        hits = []
        for sentence in self.state.corpus:
            if not query or query in sentence.text or query in sentence.id.lower():
                hits.append(sentence_to_json(sentence))
                if len(hits) >= limit:
                    break
        self._send_json({"sentences": hits})

    def _parse(self, body) -> None:
        text = body.get("rule", "")
        try:
            rule = parse_pattern(text)
        except RuleforgeError as exc:
            self._send_error_json(str(exc), location=getattr(exc, "offset", None))
            return
        self._send_json(
            {
                "ok": True,
                "printed": print_pattern(rule),
                "complete": is_complete(rule),
                "chips": _rule_chips(rule),
            }
        )

    def _resolve_sentences(self, body) -> list:
        sentences = []
        for raw in body.get("sentences", []):
            if isinstance(raw, str):
                if raw not in self.state.index:
                    raise RuleforgeError(f"unknown sentence id '{raw}'")
                sentences.append(self.state.index[raw])
            elif isinstance(raw, dict) and "ref" in raw:
                ref = raw["ref"]
                if ref not in self.state.index:
                    raise RuleforgeError(f"unknown sentence id '{ref}'")
                sentences.append(self.state.index[ref])
            else:
                sentences.append(sentence_from_json(raw))
        return sentences

    def _match(self, body) -> None:
        rule = parse_pattern(body.get("rule", ""))
        sentences = self._resolve_sentences(body)
        matches = [
            {
                "id": sentence.id,
                "spans": [[span.start, span.end] for span in find_matches(rule, sentence)],
            }
            for sentence in sentences
        ]
        self._send_json({"matches": matches})

    def _linearize(self, body) -> None:
        raw = body.get("sentence")
        if isinstance(raw, dict) and "ref" in raw:
            sentence = self.state.index.get(raw["ref"])
            if sentence is None:
                raise RuleforgeError(f"unknown sentence id '{raw['ref']}'")
        else:
            sentence = sentence_from_json(raw)
        a = span_head(sentence, Span(*body["a"]))
        b = span_head(sentence, Span(*body["b"]))
        path = shortest_dep_path(sentence, a, b)
        linearized = linearize_path(sentence, path)
        self._send_json(
            {"sentence": sentence_to_json(linearized), "selection": [0, len(linearized)]}
        )

    def _synthesize(self, body) -> None:
        spec = spec_from_json(body.get("spec"), self.state.index)
        scorer = self.state.scorer(body.get("scorer", "augmented"))
        config = SearchConfig(
            max_states=int(body.get("maxStates") or self.state.config["budget"]),
            reject=frozenset(body.get("reject", ())),
            costs=cost_table(self.state.config),
        )
        stream = bool(body.get("trace"))
        with self.state.jobs:
            if not stream:
                report = synthesize(spec, scorer, config)
                self._send_json(self._report_payload(report, spec))
                return
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "application/x-ndjson; charset=utf-8")
            self.end_headers()

            def hook(step, state, score):
                line = canonical_dumps({"step": step, "state": state, "score": score}) + "\n"
                self.wfile.write(line.encode("utf-8"))
                self.wfile.flush()

            report = synthesize(spec, scorer, config, trace_hook=hook)
            final = self._report_payload(report, spec)
            final["done"] = True
            self.wfile.write((canonical_dumps(final) + "\n").encode("utf-8"))

    def _report_payload(self, report, spec) -> dict:
        payload = report.to_json()
        if report.found:
            payload["matches"] = [
                {
                    "id": entry.sentence.id,
                    "spans": [[s.start, s.end] for s in find_matches(report.rule, entry.sentence)],
                }
                for entry in spec.entries
            ]
            payload["chips"] = _rule_chips(report.rule)
        return payload

    # ------------------------------------------------------------------
    _MIME = {
        ".html": "text/html",
        ".js": "text/javascript",
        ".css": "text/css",
        ".map": "application/json",
        ".svg": "image/svg+xml",
    }

    def _static(self, path: str) -> None:
        root = self.state.static_dir
        if root is None:
            self._send_error_json("unknown endpoint", 404)
            return
        name = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_error_json("not found", 404)
            return
        body = target.read_bytes()
        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", self._MIME.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def create_server(port: int, corpus, model, config, static_dir=None) -> ThreadingHTTPServer:
    state = ServiceState(corpus, model, config, static_dir)
    handler = type("BoundHandler", (Handler,), {"state": state})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def run_server(port, corpus, model, config, static_dir=None) -> None:
    server = create_server(port, corpus, model, config, static_dir)
    print(f"listening on http://127.0.0.1:{port} (corpus: {len(corpus)} sentences)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
