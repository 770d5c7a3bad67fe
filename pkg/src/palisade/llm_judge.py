"""Layer 3: companion-LLM judge over an OpenAI-compatible chat endpoint.

The judge is asked, via a fixed system prompt, to answer with exactly
{"injected": true} or {"injected": false}. Anything else — transport
failure, timeout, HTTP error, malformed JSON, schema drift — folds into the
blocking decision. A non-clean parse can never yield CLEAN.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from urllib.parse import urlparse

import httpx

from .corpus import Prompt, normalize
from .verdicts import Decision, Layer, LayerVerdict

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "PALISADE_JUDGE_API_KEY"
DEFAULT_TIMEOUT_S = 10.0
DEFAULT_RETRIES = 1
DEFAULT_MAX_CONCURRENCY = 8


class FailureReason(str, Enum):
    TIMEOUT = "timeout"
    HTTP_ERROR = "http_error"
    MALFORMED_JSON = "malformed_json"
    SCHEMA_VIOLATION = "schema_violation"


def default_system_prompt() -> str:
    return resources.files("palisade.data").joinpath("judge_system_prompt.txt").read_text("utf-8")


@dataclass
class JudgeConfig:
    endpoint: str
    model: str = "default"
    system_prompt: str = field(default_factory=default_system_prompt)
    timeout_s: float = DEFAULT_TIMEOUT_S
    retries: int = DEFAULT_RETRIES
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        parsed = urlparse(self.endpoint)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"endpoint is not a valid URL: {self.endpoint!r}")


@dataclass(frozen=True)
class JudgeResponse:
    decision: Decision
    raw_body: str
    failure_reason: FailureReason | None = None

    def __post_init__(self):
        # Fail-closed invariant: any failure forces the blocking decision.
        if self.failure_reason is not None and self.decision is not Decision.INJECTED:
            raise ValueError("failure reason present requires decision INJECTED")


def build_request(prompt: Prompt, config: JudgeConfig) -> dict:
    """Chat payload: fixed system prompt, then the user prompt verbatim.

    The user text is never concatenated into the system message, and
    temperature is pinned to 0 so the payload is a deterministic function of
    (prompt, config).
    """
    return {
        "model": config.model,
        "messages": [
            {"role": "system", "content": config.system_prompt},
            {"role": "user", "content": prompt.original},
        ],
        "temperature": 0,
    }


def _unwrap_content(body: str) -> tuple[str | None, FailureReason | None]:
    """Pull choices[0].message.content out of a chat-completion envelope."""
    try:
        envelope = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return None, FailureReason.MALFORMED_JSON
    if not isinstance(envelope, dict):
        return None, FailureReason.SCHEMA_VIOLATION
    choices = envelope.get("choices")
    if not isinstance(choices, list) or not choices or not isinstance(choices[0], dict):
        return None, FailureReason.SCHEMA_VIOLATION
    message = choices[0].get("message")
    if not isinstance(message, dict):
        return None, FailureReason.SCHEMA_VIOLATION
    content = message.get("content")
    if not isinstance(content, str):
        return None, FailureReason.SCHEMA_VIOLATION
    return content, None


def parse_response(body: str) -> JudgeResponse:
    """Strict verdict parse; every irregularity folds into INJECTED.

    After unwrapping the API envelope, the content must be a JSON object with
    exactly one member `injected` of boolean type. JSON parse failures map to
    MALFORMED_JSON, structural drift to SCHEMA_VIOLATION.
    """
    content, failure = _unwrap_content(body)
    if failure is not None:
        return JudgeResponse(Decision.INJECTED, body, failure)
    try:
        verdict = json.loads(content)
    except json.JSONDecodeError:
        return JudgeResponse(Decision.INJECTED, body, FailureReason.MALFORMED_JSON)
    if (
        not isinstance(verdict, dict)
        or set(verdict.keys()) != {"injected"}
        or not isinstance(verdict["injected"], bool)
    ):
        return JudgeResponse(Decision.INJECTED, body, FailureReason.SCHEMA_VIOLATION)
    decision = Decision.INJECTED if verdict["injected"] else Decision.CLEAN
    return JudgeResponse(decision, body)


class JudgeClient:
    """HTTP client for the judge endpoint; bounded outbound concurrency."""

    def __init__(self, config: JudgeConfig):
        self.config = config
        self._semaphore = threading.BoundedSemaphore(config.max_concurrency)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def submit(self, prompt: Prompt) -> JudgeResponse:
        """One judged round trip, retrying transport and HTTP failures.

        Attempts = retries + 1. Exhausted timeouts yield TIMEOUT, transport
        and non-2xx outcomes HTTP_ERROR — all INJECTED.
        """
        payload = build_request(prompt, self.config)
        failure = FailureReason.HTTP_ERROR
        detail = ""
        for _ in range(self.config.retries + 1):
            try:
                with self._semaphore:
                    response = httpx.post(
                        self.config.endpoint,
                        json=payload,
                        headers=self._headers(),
                        timeout=self.config.timeout_s,
                    )
            except httpx.TimeoutException:
                failure, detail = FailureReason.TIMEOUT, "request timed out"
                continue
            except httpx.HTTPError as exc:
                failure, detail = FailureReason.HTTP_ERROR, f"transport: {exc}"
                continue
            if response.status_code // 100 != 2:
                failure, detail = FailureReason.HTTP_ERROR, f"status {response.status_code}"
                continue
            return parse_response(response.text)
        logger.warning("judge unavailable (%s); failing closed", detail)
        return JudgeResponse(Decision.INJECTED, detail, failure)


class StubJudgeClient:
    """Deterministic offline stand-in for the judge (CI, evaluation).

    Flags a prompt when its normalized text contains any of a fixed set of
    override phrasings. Intentionally simple; it exists so evaluation runs
    need no network or credentials.
    """

    PHRASES = (
        "ignore all previous",
        "ignore the previous",
        "ignore previous",
        "ignore prior",
        "disregard previous",
        "disregard prior",
        "disregard all",
        "forget all previous",
        "forget your",
        "override your",
        "bypass your",
        "reveal your system prompt",
        "reveal the system prompt",
        "print your instructions",
        "you are now dan",
        "pretend you are",
        "act as an unrestricted",
        "no longer bound by",
    )

    def submit(self, prompt: Prompt) -> JudgeResponse:
        haystack = normalize(prompt.original)
        injected = any(phrase in haystack for phrase in self.PHRASES)
        content = json.dumps({"injected": injected})
        body = json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]})
        return parse_response(body)


class CachedJudgeClient:
    """Disk cache around another judge client, keyed by prompt hash.

    One JSON file per prompt under cache_dir; hits never touch the inner
    client, so re-evaluations are free and byte-reproducible. Cache file
    access is serialized.
    """

    def __init__(self, inner, cache_dir):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, prompt: Prompt) -> Path:
        key = hashlib.sha256(prompt.original.encode("utf-8")).hexdigest()[:24]
        return self.cache_dir / f"{key}.json"

    def submit(self, prompt: Prompt) -> JudgeResponse:
        path = self._path(prompt)
        with self._lock:
            if path.exists():
                doc = json.loads(path.read_text(encoding="utf-8"))
                return JudgeResponse(
                    decision=Decision(doc["decision"]),
                    raw_body=doc["raw_body"],
                    failure_reason=FailureReason(doc["failure_reason"]) if doc["failure_reason"] else None,
                )
        response = self.inner.submit(prompt)
        doc = {
            "decision": response.decision.value,
            "raw_body": response.raw_body,
            "failure_reason": response.failure_reason.value if response.failure_reason else None,
        }
        with self._lock:
            path.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
        return response


def judge_verdict(prompt: Prompt, config: JudgeConfig, client: JudgeClient | None = None) -> LayerVerdict:
    """Layer verdict from the judge; total, never raises on bad upstreams."""
    start = time.perf_counter()
    client = client or JudgeClient(config)
    response = client.submit(prompt)
    diagnostics = []
    if response.failure_reason is not None:
        diagnostics.append(f"fail-closed: {response.failure_reason.value}")
    return LayerVerdict(
        layer=Layer.JUDGE,
        decision=response.decision,
        score=None,
        latency_s=time.perf_counter() - start,
        diagnostics=diagnostics,
    )
