from __future__ import annotations

import logging
import threading
from typing import Dict, Optional, Protocol

import requests

from llmhg.errors import FixtureMiss, LlmParseError, LlmUnavailable
from llmhg.profile.fixtures import FixtureRecord, FixtureStore, fixture_key
from llmhg.profile.types import LlmReply, PromptRequest
from llmhg.utils import CircuitBreaker, CircuitBreakerOpen, retry_call

logger = logging.getLogger(__name__)


class LlmClient(Protocol):
    def complete(self, request: PromptRequest) -> LlmReply:
        ...


def request_key(request: PromptRequest) -> str:
    return fixture_key(request.purpose.value, request.model_id, request.rendered_text)


class LiveClient:
    """OpenAI-style ``/chat/completions`` over HTTPS.

    At most ``max_in_flight`` requests run at once; transport errors are retried with
    backoff and a circuit breaker stops the run from hammering a dead endpoint.
    """

    def __init__(
        self,
        *,
        api_base: str,
        api_key: str,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        transport_attempts: int = 3,
        retry_delay: float = 1.0,
        session: Optional[requests.Session] = None,
    ) -> None:
        self._url = f"{api_base.rstrip('/')}/chat/completions"
        self._headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}
        self._timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._attempts = transport_attempts
        self._retry_delay = retry_delay
        self._session = session or requests.Session()
        self._breaker = CircuitBreaker("llm_endpoint", threshold=3, cooldown=30.0)

    def complete(self, request: PromptRequest) -> LlmReply:
        payload = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.rendered_text}],
            "temperature": 0,
        }

        def _post() -> Dict[str, object]:
            self._breaker.allow()
            try:
                response = self._session.post(self._url, json=payload, headers=self._headers, timeout=self._timeout)
                response.raise_for_status()
                body = response.json()
            except (requests.RequestException, ValueError):
                self._breaker.record_failure()
                raise
            self._breaker.record_success()
            return body

        with self._slots:
            try:
                body = retry_call(
                    _post,
                    attempts=self._attempts,
                    delay=self._retry_delay,
                    exceptions=(requests.RequestException, ValueError),
                    label=f"{request.purpose.value}:{request.user_id}",
                    event="llm.retry",
                )
            except (CircuitBreakerOpen, requests.RequestException, ValueError) as exc:
                raise LlmUnavailable(f"{request.purpose.value} request for user {request.user_id} failed: {exc}") from exc
        return _reply_from_body(body, request)


def _reply_from_body(body: Dict[str, object], request: PromptRequest) -> LlmReply:
    try:
        choices = body["choices"]
        text = str(choices[0]["message"]["content"])  # type: ignore[index]
    except (KeyError, IndexError, TypeError) as exc:
        raise LlmParseError(f"unexpected completion payload for user {request.user_id}") from exc
    usage = body.get("usage") if isinstance(body.get("usage"), dict) else {}
    prompt_tokens = int(usage.get("prompt_tokens", 0) or 0) or estimate_tokens(request.rendered_text)  # type: ignore[union-attr]
    completion_tokens = int(usage.get("completion_tokens", 0) or 0) or estimate_tokens(text)  # type: ignore[union-attr]
    return LlmReply(text=text, prompt_tokens=prompt_tokens, completion_tokens=completion_tokens)


def estimate_tokens(text: str) -> int:
    # ~0.75 words per token for English prose
    return max(1, round(len(text.split()) / 0.75))


class RecordingClient:
    """Forwards to a live client and appends one fixture record per request."""

    def __init__(self, inner: LlmClient, store: FixtureStore) -> None:
        self._inner = inner
        self._store = store

    def complete(self, request: PromptRequest) -> LlmReply:
        reply = self._inner.complete(request)
        self._store.append(
            FixtureRecord(
                key=request_key(request),
                purpose=request.purpose.value,
                model_id=request.model_id,
                prompt=request.rendered_text,
                response=reply.text,
                prompt_tokens=reply.prompt_tokens,
                completion_tokens=reply.completion_tokens,
            )
        )
        return reply


class ReplayClient:
    """Strict replay: answers only from the fixture store, never touches the network."""

    def __init__(self, store: FixtureStore) -> None:
        self._store = store

    def complete(self, request: PromptRequest) -> LlmReply:
        key = request_key(request)
        record = self._store.lookup(key)
        if record is None:
            raise FixtureMiss(key, request.purpose.value)
        return LlmReply(text=record.response, prompt_tokens=record.prompt_tokens, completion_tokens=record.completion_tokens)
