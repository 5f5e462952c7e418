"""Text-generation gateway with pluggable backends.

The remote backend speaks the common chat-completion JSON shape::

    POST <endpoint>
    {"model": ..., "messages": [{"role": "user", "content": <prompt>}],
     "temperature": ..., "max_tokens": ..., "seed": ...}

and reads ``choices[0].message.content`` from the reply.
"""
from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .mock_llm import MockGrammarError, mock_complete

log = logging.getLogger(__name__)

DEFAULT_CONTEXT_BUDGET = 4096
DEFAULT_TEMPERATURE = 0.8
DEFAULT_MAX_TOKENS = 2048
DEFAULT_CONCURRENCY = 4
DEFAULT_RETRY_CAP = 4
API_KEY_ENV = "SEMFORGE_API_KEY"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    pass


class RateLimited(GatewayError):
    def __init__(self, after_ms: int | None = None, message: str = "rate limited"):
        super().__init__(message if after_ms is None else f"{message}; retry after {after_ms} ms")
        self.after_ms = after_ms


class ContextOverflow(GatewayError):
    pass


class BackendRefusal(GatewayError):
    pass


def estimate_tokens(text: str) -> int:
    """Rough sub-word count: words and punctuation marks."""
    return len(_TOKEN_RE.findall(text))


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    seed: int = 0
    context_budget: int = DEFAULT_CONTEXT_BUDGET

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    backend_id: str
    latency_ms: int
    attempts: int = 1
    warning: str | None = None


class MockBackend:
    """Grammar-driven backend; output depends only on (prompt, seed)."""

    backend_id = "mock"

    def generate(self, request: GenerationRequest) -> str:
        try:
            return mock_complete(request.prompt, request.seed)
        except MockGrammarError as exc:
            raise BackendRefusal(str(exc)) from None


class RemoteBackend:
    def __init__(self, endpoint: str, model: str, api_key_env: str = API_KEY_ENV, timeout: float = 120.0,
                 client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.client = client or httpx.Client(timeout=timeout)
        self.backend_id = f"remote:{model}"

    def _headers(self):
        key = os.environ.get(self.api_key_env)
        return {"Authorization": f"Bearer {key}"} if key else {}

    def generate(self, request: GenerationRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "seed": request.seed,
        }
        try:
            resp = self.client.post(self.endpoint, json=payload, headers=self._headers())
        except httpx.HTTPError as exc:
            raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimited(_retry_after_ms(resp))
        if resp.status_code >= 500:
            raise TransportError(f"server error {resp.status_code}")
        if resp.status_code >= 400:
            message = _error_message(resp)
            if resp.status_code == 413 or "context" in message.lower() or "too long" in message.lower():
                raise ContextOverflow(message)
            raise BackendRefusal(f"{resp.status_code}: {message}")
        try:
            choice = resp.json()["choices"][0]
            content = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise BackendRefusal("malformed completion payload") from None
        if choice.get("finish_reason") == "content_filter":
            raise BackendRefusal("completion was filtered")
        return content or ""


def _retry_after_ms(resp: httpx.Response) -> int | None:
    value = resp.headers.get("Retry-After")
    try:
        return int(float(value) * 1000) if value is not None else None
    except ValueError:
        return None


def _error_message(resp: httpx.Response) -> str:
    try:
        error = resp.json().get("error", {})
        return error.get("message", "") if isinstance(error, dict) else str(error)
    except ValueError:
        return resp.text


class Gateway:
    """Retries transient failures; batches keep submission order."""

    def __init__(self, backend, concurrency: int = DEFAULT_CONCURRENCY, retry_cap: int = DEFAULT_RETRY_CAP,
                 backoff_base: float = 0.5, backoff_max: float = 30.0, sleep=None):
        if concurrency < 1:
            raise ValueError("concurrency must be positive")
        self.backend = backend
        self.concurrency = concurrency
        self.retry_cap = retry_cap
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self.sleep = sleep or time.sleep

    def backoff_ms(self, attempt: int, error: GatewayError) -> int:
        if isinstance(error, RateLimited) and error.after_ms is not None:
            return error.after_ms
        return int(min(self.backoff_max, self.backoff_base * 2 ** (attempt - 1)) * 1000)

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        used = estimate_tokens(request.prompt)
        if used > request.context_budget:
            raise ContextOverflow(f"prompt is ~{used} tokens, budget is {request.context_budget}")
        start = time.monotonic()
        attempt = 0
        while True:
            attempt += 1
            try:
                text = self.backend.generate(request)
                break
            except (TransportError, RateLimited) as exc:
                if attempt > self.retry_cap:
                    log.warning(json.dumps({"event": "give_up", "backend": self.backend.backend_id,
                                            "attempt": attempt, "error": str(exc)}))
                    raise
                delay_ms = self.backoff_ms(attempt, exc)
                log.info(json.dumps({"event": "retry", "backend": self.backend.backend_id, "attempt": attempt,
                                     "delay_ms": delay_ms, "error": type(exc).__name__}))
                self.sleep(delay_ms / 1000)
        latency = int((time.monotonic() - start) * 1000)
        return GenerationResponse(text, self.backend.backend_id, latency, attempt,
                                  warning=None if text else "empty-response")

    def complete_many(self, requests) -> list[GenerationResponse]:
        requests = list(requests)
        if self.concurrency == 1 or len(requests) <= 1:
            return [self.complete(r) for r in requests]
        with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
            return list(pool.map(self.complete, requests))


def make_gateway(backend: str = "mock", endpoint: str | None = None, model: str = "llama-2-13b-chat",
                 api_key_env: str = API_KEY_ENV, concurrency: int = DEFAULT_CONCURRENCY,
                 retry_cap: int = DEFAULT_RETRY_CAP, **kwargs) -> Gateway:
    if backend == "mock":
        impl = MockBackend()
    elif backend == "remote":
        if not endpoint:
            raise ValueError("the remote backend needs an endpoint URL")
        impl = RemoteBackend(endpoint, model, api_key_env=api_key_env)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return Gateway(impl, concurrency=concurrency, retry_cap=retry_cap, **kwargs)
