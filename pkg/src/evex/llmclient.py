"""Single gateway for all external LLM traffic.

Every request/response pair is recorded in a content-addressed cache so
pipelines replay byte-identically with zero network calls once the cache
is frozen.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

__all__ = ["LLMError", "EndpointConfig", "LLMClient", "request_hash"]

log = logging.getLogger(__name__)

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class LLMError(RuntimeError):
    def __init__(self, message: str, *, permanent: bool = False):
        super().__init__(message)
        self.permanent = permanent


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key_env: str = "EVEX_API_KEY"
    max_in_flight: int = 4
    max_attempts: int = 4
    backoff_base: float = 0.5
    timeout: float = 60.0
    temperature: float = 1.0
    max_tokens: int | None = None

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def request_hash(body: dict) -> str:
    """Content address of a request: pure function of the request body
    (which carries the model name)."""
    canon = json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class LLMClient:
    cfg: EndpointConfig
    cache_dir: str
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self) -> None:
        os.makedirs(self.cache_dir, exist_ok=True)

    def _body(self, messages: list[dict], temperature: float | None) -> dict:
        body: dict = {
            "model": self.cfg.model_name,
            "messages": messages,
            "temperature": self.cfg.temperature if temperature is None else temperature,
        }
        if self.cfg.max_tokens is not None:
            body["max_tokens"] = self.cfg.max_tokens
        return body

    def _cache_path(self, key: str) -> str:
        return os.path.join(self.cache_dir, f"{key}.json")

    def _cache_read(self, key: str) -> dict | None:
        path = self._cache_path(key)
        if not os.path.exists(path):
            return None
        with open(path, encoding="utf-8") as f:
            return json.load(f)

    def _cache_write(self, key: str, transcript: dict) -> None:
        path = self._cache_path(key)
        tmp = f"{path}.tmp.{os.getpid()}.{threading.get_ident()}"
        with self._lock:
            with open(tmp, "w", encoding="utf-8") as f:
                json.dump(transcript, f, ensure_ascii=False, indent=2)
                f.write("\n")
            os.replace(tmp, path)

    @staticmethod
    def _extract_text(envelope: dict) -> str:
        try:
            text = envelope["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise LLMError(f"malformed response envelope: {exc}", permanent=True) from exc
        if not isinstance(text, str):
            raise LLMError("response content is not a string", permanent=True)
        return text

    def _call_once(self, body: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.cfg.api_key_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        resp = requests.post(url, json=body, headers=headers, timeout=self.cfg.timeout)
        if resp.status_code in _RETRYABLE_STATUS:
            raise LLMError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code != 200:
            raise LLMError(
                f"HTTP {resp.status_code}: {resp.text[:200]}", permanent=True
            )
        return resp.json()

    def complete(self, messages: list[dict], *, temperature: float | None = None) -> str:
        """Return the completion text, replaying from cache when possible."""
        body = self._body(messages, temperature)
        key = request_hash(body)
        cached = self._cache_read(key)
        if cached is not None:
            return self._extract_text(cached["response"])
        last: LLMError | None = None
        for attempt in range(self.cfg.max_attempts):
            try:
                started = time.monotonic()
                envelope = self._call_once(body)
                latency_ms = int((time.monotonic() - started) * 1000)
                break
            except LLMError as exc:
                if exc.permanent:
                    raise
                last = exc
            except (requests.Timeout, requests.ConnectionError) as exc:
                last = LLMError(str(exc))
            if attempt + 1 < self.cfg.max_attempts:
                time.sleep(self.cfg.backoff_base * (2**attempt))
        else:
            raise LLMError(f"retries exhausted after {self.cfg.max_attempts} attempts: {last}")
        text = self._extract_text(envelope)
        self._cache_write(
            key,
            {
                "prompt_hash": key,
                "request": body,
                "response": envelope,
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "latency_ms": latency_ms,
            },
        )
        return text

    def complete_batch(
        self, message_sets: list[list[dict]], *, temperature: float | None = None
    ) -> list[str]:
        """Order-preserving batch completion, at most max_in_flight concurrent."""
        if not message_sets:
            return []
        with ThreadPoolExecutor(max_workers=self.cfg.max_in_flight) as pool:
            return list(pool.map(lambda m: self.complete(m, temperature=temperature), message_sets))
