"""Chat client with three interchangeable modes: live, replay, scripted.

Replay keys fixtures by a stable hash of the canonicalized request, so an
edited prompt template invalidates its stale fixtures instead of silently
replaying them. All modes share the same pre-send budget check and the same
response post-processing (delimited thinking blocks are stripped before any
parsing happens downstream).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .errors import (
    BudgetExceededError,
    EndpointError,
    FixtureMissError,
    ScriptExhaustedError,
)

logger = logging.getLogger(__name__)

DEFAULT_TOKEN_BUDGET = 32768
_THINK_RE = re.compile(r"<think>.*?</think>", re.DOTALL)


def token_estimate(text: str) -> int:
    """Default token proxy: ceil(utf-8 bytes / 4).

    Used consistently for budgets and reports so comparisons stay coherent;
    swap in an exact tokenizer via a client's `token_estimator` if needed.
    """
    if not text:
        return 0
    return math.ceil(len(text.encode("utf-8")) / 4)


def strip_thinking(text: str) -> str:
    """Drop delimited thinking blocks so parsers see only the visible answer."""
    return _THINK_RE.sub("", text).strip()


@dataclass
class ChatRequest:
    messages: list[dict[str, str]]
    temperature: float = 0.0
    max_tokens: int = DEFAULT_TOKEN_BUDGET
    model: str = "default"

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("ChatRequest needs at least one message")
        for msg in self.messages:
            if msg.get("role") not in ("system", "user", "assistant"):
                raise ValueError(f"bad message role: {msg.get('role')!r}")

    @classmethod
    def user(cls, content: str, **kwargs) -> "ChatRequest":
        return cls(messages=[{"role": "user", "content": content}], **kwargs)

    def prompt_text(self) -> str:
        return "\n".join(m["content"] for m in self.messages)


def canonical_request(request: ChatRequest) -> str:
    """Platform-stable serialization: sorted keys, normalized line endings."""
    payload = {
        "model": request.model,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "messages": [
            {
                "role": m["role"],
                "content": m["content"].replace("\r\n", "\n").replace("\r", "\n"),
            }
            for m in request.messages
        ],
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def request_key(request: ChatRequest) -> str:
    return hashlib.sha256(canonical_request(request).encode("utf-8")).hexdigest()


class LlmClient:
    """Base chat client: budget gate in front, thinking-strip behind."""

    def __init__(self, *, token_budget: int = DEFAULT_TOKEN_BUDGET) -> None:
        self.token_budget = token_budget
        self.token_estimator: Callable[[str], int] = token_estimate

    def chat(self, request: ChatRequest) -> str:
        estimate = self.token_estimator(request.prompt_text())
        if estimate > self.token_budget:
            raise BudgetExceededError(
                f"prompt estimate {estimate} tokens exceeds budget {self.token_budget}"
            )
        return strip_thinking(self._send(request))

    def _send(self, request: ChatRequest) -> str:
        raise NotImplementedError


class LiveClient(LlmClient):
    """Chat-completions over HTTPS with bounded exponential backoff."""

    def __init__(
        self,
        endpoint_url: str,
        model: str,
        *,
        api_key_env: str = "TABLEZOOMER_API_KEY",
        token_budget: int = DEFAULT_TOKEN_BUDGET,
        max_retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 120.0,
        extra_params: dict | None = None,
    ) -> None:
        super().__init__(token_budget=token_budget)
        self.endpoint_url = endpoint_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        # opaque passthrough (e.g. endpoint-side think-mode toggles)
        self.extra_params = dict(extra_params or {})

    def _send(self, request: ChatRequest) -> str:
        import httpx

        payload = {
            "model": request.model if request.model != "default" else self.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            **self.extra_params,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        url = f"{self.endpoint_url}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                response = httpx.post(url, json=payload, headers=headers, timeout=self.timeout)
                if response.status_code >= 500 or response.status_code == 429:
                    last_error = EndpointError(f"HTTP {response.status_code}: {response.text[:200]}")
                    continue
                response.raise_for_status()
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise EndpointError(f"endpoint failed after {self.max_retries} retries: {last_error}")


class ReplayClient(LlmClient):
    """Deterministic fixture store; zero network unless recording through."""

    def __init__(
        self,
        fixture_dir: str | Path,
        *,
        record_from: LlmClient | None = None,
        token_budget: int = DEFAULT_TOKEN_BUDGET,
    ) -> None:
        super().__init__(token_budget=token_budget)
        self.fixture_dir = Path(fixture_dir)
        self.record_from = record_from
        if record_from is not None:
            self.fixture_dir.mkdir(parents=True, exist_ok=True)

    def _fixture_path(self, key: str) -> Path:
        return self.fixture_dir / f"{key}.json"

    def _send(self, request: ChatRequest) -> str:
        key = request_key(request)
        path = self._fixture_path(key)
        if path.is_file():
            return json.loads(path.read_text(encoding="utf-8"))["response"]
        if self.record_from is not None:
            response = self.record_from._send(request)
            document = {"request": json.loads(canonical_request(request)), "response": response}
            path.write_text(json.dumps(document, ensure_ascii=False, indent=1), encoding="utf-8")
            return response
        prompt_head = request.prompt_text()[:120].replace("\n", " ")
        raise FixtureMissError(f"no fixture {key} under {self.fixture_dir} (prompt: {prompt_head}...)")


class ScriptedClient(LlmClient):
    """Pops queued responses in order; records every request for assertions."""

    def __init__(self, responses: Sequence[str], *, token_budget: int = DEFAULT_TOKEN_BUDGET) -> None:
        super().__init__(token_budget=token_budget)
        self._queue = list(responses)
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []

    def _send(self, request: ChatRequest) -> str:
        with self._lock:
            self.requests.append(request)
            if not self._queue:
                raise ScriptExhaustedError(
                    f"scripted responses exhausted after {len(self.requests) - 1} calls"
                )
            return self._queue.pop(0)

    @property
    def remaining(self) -> int:
        return len(self._queue)


class CountingClient(LlmClient):
    """Proxy that meters calls and prompt tokens for one unit of work."""

    def __init__(self, inner: LlmClient) -> None:
        super().__init__(token_budget=inner.token_budget)
        self.inner = inner
        self.token_estimator = inner.token_estimator
        self.calls = 0
        self.prompt_tokens = 0

    def chat(self, request: ChatRequest) -> str:
        self.calls += 1
        self.prompt_tokens += self.token_estimator(request.prompt_text())
        return self.inner.chat(request)


class CallBudget:
    """Hard cap on chat calls for one phase (enforces the per-round bound)."""

    def __init__(self, limit: int) -> None:
        self.limit = limit
        self.used = 0

    @property
    def remaining(self) -> int:
        return self.limit - self.used

    def take(self) -> bool:
        if self.used >= self.limit:
            return False
        self.used += 1
        return True
