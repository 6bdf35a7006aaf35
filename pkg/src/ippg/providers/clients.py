"""Model clients: a deterministic offline mock and thin HTTP clients for live providers.

Live credentials are read from ``OPENAI_API_KEY`` / ``ANTHROPIC_API_KEY`` and
are never written to transcripts or logs.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol

import httpx

from .profiles import ProviderProfile
from .requests import PromptRequest, request_image_tokens

log = logging.getLogger(__name__)


class ClientError(Exception):
    """Base class for failed model calls."""


class TransportError(ClientError):
    """Network-level or throttling failure; the call may succeed if retried."""


class ProviderError(ClientError):
    """The provider rejected the request; retrying will not help."""


@dataclass(frozen=True)
class Usage:
    input_text: int
    output_text: int
    image: int | None = None

    def __post_init__(self) -> None:
        for name in ("input_text", "output_text", "image"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    reported_usage: Usage | None
    latency_ms: int


class Client(Protocol):
    max_in_flight: int | None

    def complete(self, request: PromptRequest) -> CompletionResult: ...


def _unit_hash(*parts: object) -> tuple[float, str]:
    h = hashlib.sha256("\x1f".join(map(str, parts)).encode()).hexdigest()
    return int(h[:13], 16) / 16**13, h


class MockClient:
    """Deterministic offline client.

    The reply is a pure function of ``(request.digest, seed)``. When an answer
    for ``request.metadata["sample_id"]`` is known, the mock returns it with
    probability ``accuracy`` and a decoy otherwise. Usage is synthesized from
    the same local estimates :func:`~ippg.providers.requests.estimate_cost` uses.

    ``transient_failure_rate`` makes that share of requests fail their first
    attempt with :class:`TransportError`; ``rejection_rate`` makes requests fail
    every attempt with :class:`ProviderError`.
    """

    max_in_flight: int | None = None

    def __init__(
        self,
        profile: ProviderProfile,
        seed: int = 0,
        answers: Mapping[str, str] | None = None,
        accuracy: float = 0.6,
        transient_failure_rate: float = 0.0,
        rejection_rate: float = 0.0,
    ) -> None:
        self.profile = profile
        self.seed = seed
        self.answers = dict(answers or {})
        self.accuracy = accuracy
        self.transient_failure_rate = transient_failure_rate
        self.rejection_rate = rejection_rate
        self._attempts: dict[str, int] = {}
        self._lock = threading.Lock()

    def complete(self, request: PromptRequest) -> CompletionResult:
        digest = request.digest
        with self._lock:
            attempt = self._attempts.get(digest, 0)
            self._attempts[digest] = attempt + 1
        u_fail, _ = _unit_hash("fail", self.seed, digest)
        if u_fail < self.rejection_rate:
            raise ProviderError("mock rejection")
        if attempt == 0 and u_fail < self.rejection_rate + self.transient_failure_rate:
            raise TransportError("mock transient failure")

        u, h = _unit_hash("answer", self.seed, digest)
        truth = self.answers.get(str(request.metadata.get("sample_id")))
        if truth is not None and u < self.accuracy:
            text = truth
        else:
            text = f"mock-{h[:12]}"
        usage = Usage(
            input_text=self.profile.count_text(request.system_text) + self.profile.count_text(request.user_text),
            output_text=self.profile.count_text(text),
            image=request_image_tokens(self.profile, request),
        )
        return CompletionResult(text=text, reported_usage=usage, latency_ms=100 + int(u * 900))


@dataclass(frozen=True)
class RetryPolicy:
    """Capped exponential backoff for :class:`TransportError`."""

    max_attempts: int = 4
    base_delay_s: float = 0.5
    max_delay_s: float = 8.0

    def delay(self, retry_index: int) -> float:
        return min(self.max_delay_s, self.base_delay_s * 2**retry_index)


class RetryBudget:
    """Retries shared by every call in one sweep."""

    def __init__(self, total: int) -> None:
        self.remaining = total
        self._lock = threading.Lock()

    def take(self) -> bool:
        with self._lock:
            if self.remaining <= 0:
                return False
            self.remaining -= 1
            return True


def execute(
    client: Client,
    request: PromptRequest,
    retry: RetryPolicy | None = None,
    budget: RetryBudget | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> CompletionResult:
    """Call ``client`` with retries on transport errors.

    Provider rejections propagate immediately; transport errors propagate once
    attempts or the shared budget run out.
    """
    retry = retry or RetryPolicy()
    for attempt in range(retry.max_attempts):
        try:
            return client.complete(request)
        except TransportError:
            last = attempt == retry.max_attempts - 1
            if last or (budget is not None and not budget.take()):
                raise
            delay = retry.delay(attempt)
            log.debug("transport error on %s, retrying in %.2fs", request.digest[:12], delay)
            sleep(delay)
    raise AssertionError("unreachable")


def _png_b64(img) -> str:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _raise_for_status(resp: httpx.Response) -> None:
    if resp.status_code == 429 or resp.status_code >= 500:
        raise TransportError(f"HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")


class _HTTPClient:
    env_var = ""
    default_url = ""

    def __init__(
        self,
        model: str,
        api_key: str | None = None,
        base_url: str | None = None,
        max_tokens: int = 1024,
        max_in_flight: int = 4,
        timeout_s: float = 120.0,
        http: httpx.Client | None = None,
    ) -> None:
        self.model = model
        self._api_key = api_key if api_key is not None else os.environ.get(self.env_var)
        if not self._api_key:
            raise ProviderError(f"no API key: set {self.env_var}")
        self.base_url = base_url or self.default_url
        self.max_tokens = max_tokens
        self.max_in_flight = max_in_flight
        self._http = http or httpx.Client(timeout=timeout_s)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(model={self.model!r}, base_url={self.base_url!r})"

    def _post(self, payload: dict, headers: dict) -> tuple[dict, int]:
        start = time.perf_counter()
        try:
            resp = self._http.post(self.base_url, json=payload, headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        _raise_for_status(resp)
        return resp.json(), int((time.perf_counter() - start) * 1000)


class OpenAIChatClient(_HTTPClient):
    env_var = "OPENAI_API_KEY"
    default_url = "https://api.openai.com/v1/chat/completions"

    def payload(self, request: PromptRequest) -> dict:
        content: list[dict] = []
        if request.user_text:
            content.append({"type": "text", "text": request.user_text})
        for img in request.images:
            content.append({"type": "image_url", "image_url": {"url": f"data:image/png;base64,{_png_b64(img)}"}})
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": content})
        return {"model": self.model, "messages": messages, "max_tokens": self.max_tokens}

    def complete(self, request: PromptRequest) -> CompletionResult:
        body, ms = self._post(self.payload(request), {"Authorization": f"Bearer {self._api_key}"})
        try:
            text = body["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed response: {exc}") from exc
        usage = body.get("usage")
        reported = Usage(usage["prompt_tokens"], usage["completion_tokens"]) if usage else None
        return CompletionResult(text, reported, ms)


class AnthropicClient(_HTTPClient):
    env_var = "ANTHROPIC_API_KEY"
    default_url = "https://api.anthropic.com/v1/messages"
    api_version = "2023-06-01"

    def payload(self, request: PromptRequest) -> dict:
        content: list[dict] = [
            {"type": "image", "source": {"type": "base64", "media_type": "image/png", "data": _png_b64(img)}}
            for img in request.images
        ]
        if request.user_text:
            content.append({"type": "text", "text": request.user_text})
        payload: dict[str, Any] = {
            "model": self.model,
            "max_tokens": self.max_tokens,
            "messages": [{"role": "user", "content": content}],
        }
        if request.system_text:
            payload["system"] = request.system_text
        return payload

    def complete(self, request: PromptRequest) -> CompletionResult:
        headers = {"x-api-key": self._api_key, "anthropic-version": self.api_version}
        body, ms = self._post(self.payload(request), headers)
        try:
            text = "".join(block.get("text", "") for block in body["content"] if block.get("type") == "text")
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"malformed response: {exc}") from exc
        usage = body.get("usage")
        reported = Usage(usage["input_tokens"], usage["output_tokens"]) if usage else None
        return CompletionResult(text, reported, ms)


class TranscriptWriter:
    """Append-only JSON-lines audit log of requests and responses."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def record(
        self,
        request: PromptRequest,
        result: CompletionResult | None = None,
        error: BaseException | None = None,
    ) -> None:
        entry: dict[str, Any] = {
            "digest": request.digest,
            "mode": request.mode.value,
            "metadata": dict(request.metadata),
            "system_text": request.system_text,
            "user_text": request.user_text,
            "images": request.image_sizes,
        }
        if result is not None:
            entry["response"] = asdict(result)
        if error is not None:
            entry["error"] = {"type": type(error).__name__, "message": str(error)}
        line = json.dumps(entry, sort_keys=True, ensure_ascii=False)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
