"""Scorer transport: HTTP client, local stub, and protocol conformance.

Wire protocol. ``POST {base}/score`` with body
``{"triples": [{"head": ..., "relation": ..., "tail": ...}, ...]}``
returns ``{"scores": [...]}`` with one real in [0, 1] per input triple,
in input order. ``GET {base}/health`` returns ``{"status": "ok"}`` once
the service is ready (``"warming"`` before that). Malformed requests
get a 4xx response.

``run_conformance_checks`` exercises exactly this contract against any
base URL, so the same suite validates both the in-repo mock used by
client tests and a real scoring service.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import requests

from .kg_store import Triple


class ScorerError(RuntimeError):
    pass


class ScorerTransportError(ScorerError):
    """Endpoint unreachable or persistently failing."""


class ScorerProtocolError(ScorerError):
    """Endpoint reachable but violating the wire contract."""


@dataclass(frozen=True)
class ScorerEndpoint:
    base_url: str
    timeout: float = 30.0
    batch_size: int = 64
    max_retries: int = 3

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def url(self, route: str) -> str:
        return self.base_url.rstrip("/") + route


class StubScorer:
    """Constant-score scorer for dry runs and determinism tests."""

    def __init__(self, value: float = 0.5):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"stub score must be in [0, 1], got {value}")
        self.value = value

    def score(self, triples: Sequence[Triple]) -> list[float]:
        return [self.value] * len(triples)


class HttpScorer:
    """Client for the scoring wire protocol, with batching and retries."""

    def __init__(self, endpoint: ScorerEndpoint, session=None):
        self.endpoint = endpoint
        self._session = session or requests.Session()

    def health(self) -> dict:
        response = self._session.get(self.endpoint.url("/health"), timeout=self.endpoint.timeout)
        return response.json()

    def score(self, triples: Sequence[Triple]) -> list[float]:
        scores: list[float] = []
        step = self.endpoint.batch_size
        for start in range(0, len(triples), step):
            batch = triples[start:start + step]
            scores.extend(self._score_batch(batch))
        return scores

    def _score_batch(self, batch: Sequence[Triple]) -> list[float]:
        body = {"triples": [{"head": t.head, "relation": t.relation, "tail": t.tail}
                            for t in batch]}
        response = self._post_with_retries(body)
        try:
            payload = response.json()
        except ValueError as err:
            raise ScorerProtocolError(f"non-JSON response: {err}") from err
        scores = payload.get("scores") if isinstance(payload, dict) else None
        if not isinstance(scores, list):
            raise ScorerProtocolError(f"response missing 'scores' list: {payload!r}")
        if len(scores) != len(batch):
            raise ScorerProtocolError(
                f"score count {len(scores)} does not match batch size {len(batch)}")
        for s in scores:
            if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0.0 <= s <= 1.0:
                raise ScorerProtocolError(f"score out of [0, 1]: {s!r}")
        return [float(s) for s in scores]

    def _post_with_retries(self, body: dict):
        last_error: Exception | None = None
        for attempt in range(self.endpoint.max_retries + 1):
            try:
                response = self._session.post(self.endpoint.url("/score"), json=body,
                                              timeout=self.endpoint.timeout)
            except requests.RequestException as err:
                last_error = err
                time.sleep(min(0.1 * (2 ** attempt), 2.0))
                continue
            if response.status_code >= 500:
                last_error = ScorerTransportError(f"server error {response.status_code}")
                time.sleep(min(0.1 * (2 ** attempt), 2.0))
                continue
            if response.status_code >= 400:
                raise ScorerProtocolError(
                    f"request rejected with {response.status_code}: {response.text[:200]}")
            return response
        raise ScorerTransportError(f"scorer unreachable after retries: {last_error}")


def score_batch(endpoint: ScorerEndpoint, triples: Sequence[Triple]) -> list[float]:
    """One-shot scoring through a fresh client."""
    return HttpScorer(endpoint).score(triples)


def parse_scorer_spec(spec: str):
    """Build a scorer from a CLI spec: ``stub``, ``stub:0.7``, or a URL."""
    if spec == "stub":
        return StubScorer()
    if spec.startswith("stub:"):
        return StubScorer(float(spec.split(":", 1)[1]))
    if spec.startswith(("http://", "https://")):
        return HttpScorer(ScorerEndpoint(spec))
    raise ValueError(f"scorer spec must be 'stub', 'stub:<value>', or an http(s) URL, got {spec!r}")


def run_conformance_checks(base_url: str, client=None, ready_timeout: float = 10.0) -> list[str]:
    """Assert the wire contract against a live base URL.

    Returns the list of passed check names; raises AssertionError naming
    the first failed check. ``client`` defaults to ``requests`` and only
    needs get/post with a ``json=`` keyword.
    """
    client = client or requests
    base = base_url.rstrip("/")
    passed = []

    def check(name, condition, detail=""):
        assert condition, f"conformance check failed: {name} {detail}"
        passed.append(name)

    response = client.get(base + "/health")
    check("health-responds", response.status_code == 200, f"(status {response.status_code})")
    status = response.json().get("status")
    check("health-status-field", status in ("ok", "warming"), f"(status {status!r})")
    deadline = time.monotonic() + ready_timeout
    while status != "ok" and time.monotonic() < deadline:
        time.sleep(0.1)
        status = client.get(base + "/health").json().get("status")
    check("health-becomes-ready", status == "ok", f"(status {status!r})")

    response = client.post(base + "/score", json={"triples": []})
    check("empty-list-accepted", response.status_code == 200, f"(status {response.status_code})")
    check("empty-list-empty-scores", response.json().get("scores") == [])

    triples = [
        {"head": "PersonX eats an apple", "relation": "xWant", "tail": "to have lunch"},
        {"head": "PersonX plays basketball", "relation": "xNeed", "tail": "a ball"},
        {"head": "PersonX eats an apple", "relation": "xWant", "tail": "to have lunch"},
    ]
    response = client.post(base + "/score", json={"triples": triples})
    check("batch-accepted", response.status_code == 200, f"(status {response.status_code})")
    scores = response.json().get("scores")
    check("one-score-per-triple", isinstance(scores, list) and len(scores) == len(triples))
    check("scores-in-unit-interval",
          all(isinstance(s, (int, float)) and not isinstance(s, bool) and 0.0 <= s <= 1.0
              for s in scores), f"(scores {scores!r})")
    check("duplicate-inputs-same-score", scores[0] == scores[2], f"(scores {scores!r})")

    singles = []
    for t in triples[:2]:
        r = client.post(base + "/score", json={"triples": [t]})
        check("single-accepted", r.status_code == 200, f"(status {r.status_code})")
        singles.append(r.json()["scores"][0])
    check("order-preserved-across-batching", singles == scores[:2],
          f"(singles {singles!r} vs batch {scores[:2]!r})")

    response = client.post(base + "/score", json={"triples": [{"head": "x", "tail": "y"}]})
    check("missing-field-rejected", 400 <= response.status_code < 500,
          f"(status {response.status_code})")
    response = client.post(base + "/score", json={"not_triples": 1})
    check("bad-body-rejected", 400 <= response.status_code < 500,
          f"(status {response.status_code})")
    return passed
