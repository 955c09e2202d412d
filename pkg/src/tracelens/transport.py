"""Provider-agnostic LLM transport: chat-completion HTTP, retries, response cache."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Optional, Sequence

import httpx

from .errors import AuthError, ContextOverflow, TransportError
from .judging import JudgeConfig
from .prompts import render

logger = logging.getLogger(__name__)

API_KEY_ENV = "ACLEAR_API_KEY"
RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}
_OVERFLOW_MARKERS = ("context length", "context_length", "maximum context", "too many tokens")


class LlmClient:
    """Synchronous chat-completion client.

    Transient transport errors are retried with exponential backoff up to
    ``max_retries``; when ``cache_dir`` is set, responses are cached in
    content-addressed files keyed by (model, prompt, temperature), so
    temperature-0 re-runs are free and deterministic.
    """

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        *,
        temperature: float = 0.0,
        max_retries: int = 3,
        cache_dir: Optional[str | Path] = None,
        timeout_seconds: float = 120.0,
        api_key: Optional[str] = None,
        transport: Optional[httpx.BaseTransport] = None,
        backoff_base: float = 0.5,
    ) -> None:
        self.endpoint = endpoint
        self.model_name = model_name
        self.temperature = temperature
        self.max_retries = max_retries
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.backoff_base = backoff_base
        self.cache_hits = 0
        self.cache_misses = 0
        self.requests_sent = 0
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._http = httpx.Client(timeout=timeout_seconds, headers=headers, transport=transport)

    @classmethod
    def from_config(cls, config: JudgeConfig, **kwargs) -> "LlmClient":
        return cls(
            endpoint=config.endpoint,
            model_name=config.model_name,
            temperature=config.temperature,
            max_retries=config.max_retries,
            cache_dir=config.cache_dir,
            timeout_seconds=config.timeout_seconds,
            **kwargs,
        )

    # cache ------------------------------------------------------------------

    def _cache_path(self, prompt: str) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        key = hashlib.sha256(
            f"{self.model_name}\x00{self.temperature!r}\x00{prompt}".encode("utf-8")
        ).hexdigest()
        return self.cache_dir / f"{key}.json"

    def _cache_read(self, prompt: str) -> Optional[str]:
        path = self._cache_path(prompt)
        if path is None or not path.is_file():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))["response"]
        except (OSError, json.JSONDecodeError, KeyError):
            return None  # unreadable cache entry: treat as a miss

    def _cache_write(self, prompt: str, response: str) -> None:
        path = self._cache_path(prompt)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(
            {"model": self.model_name, "temperature": self.temperature, "response": response}
        )
        # atomic replace keeps concurrent writers safe
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)

    # transport ---------------------------------------------------------------

    def complete(self, prompt: str) -> str:
        """Return the model's completion for a single-user-message chat."""
        if not prompt:
            raise ValueError("prompt is empty")
        cached = self._cache_read(prompt)
        if cached is not None:
            self.cache_hits += 1
            return cached
        self.cache_misses += 1

        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        last_error: Optional[str] = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                delay = self.backoff_base * (2 ** (attempt - 1))
                time.sleep(delay)
            try:
                self.requests_sent += 1
                response = self._http.post(self.endpoint, json=body)
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                logger.warning("LLM request failed (attempt %d): %s", attempt + 1, last_error)
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"auth rejected by {self.endpoint} (HTTP {response.status_code})")
            if response.status_code == 400 and any(
                marker in response.text.lower() for marker in _OVERFLOW_MARKERS
            ):
                raise ContextOverflow(f"prompt exceeds model limit: {response.text[:200]}")
            if response.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {response.status_code}"
                logger.warning("LLM request failed (attempt %d): %s", attempt + 1, last_error)
                continue
            if response.status_code != 200:
                raise TransportError(f"HTTP {response.status_code} from {self.endpoint}: {response.text[:200]}")
            text = self._extract_text(response)
            self._cache_write(prompt, text)
            return text
        raise TransportError(
            f"giving up after {self.max_retries + 1} attempts against {self.endpoint}: {last_error}"
        )

    @staticmethod
    def _extract_text(response: httpx.Response) -> str:
        try:
            payload = response.json()
        except json.JSONDecodeError as exc:
            raise TransportError(f"non-JSON completion response: {exc}") from exc
        try:
            choice = payload["choices"][0]
            if "message" in choice:
                return choice["message"]["content"] or ""
            return choice.get("text", "")
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected completion payload shape: {payload!r:.200}") from exc

    def close(self) -> None:
        self._http.close()


class HttpJudgeBackend:
    """Judge backend that renders the mode templates and calls the transport."""

    def __init__(self, config: JudgeConfig, client: Optional[LlmClient] = None) -> None:
        self.config = config
        self.client = client or LlmClient.from_config(config)

    def _ask(self, mode: str, values: dict[str, str]) -> str:
        prompt = render(self.config.mode_prompts[mode], values)
        return self.client.complete(prompt)

    def step_call(self, *, task: str, input_text: str, output_text: str, context: str,
                  dimensions: Sequence[str]) -> str:
        return self._ask(
            "step",
            {
                "task": task,
                "input": input_text,
                "output": output_text,
                "context": context,
                "dimensions": ", ".join(dimensions),
            },
        )

    def trace_call(self, *, task: str, rendered_trace: str, dimensions: Sequence[str]) -> str:
        return self._ask(
            "trace",
            {"task": task, "trace": rendered_trace, "dimensions": ", ".join(dimensions)},
        )

    def rubric_gen_call(self, *, task: str) -> str:
        return self._ask("rubric_gen", {"task": task})

    def rubric_verify_call(self, *, task: str, rendered_trace: str,
                           rubrics: Sequence[tuple[str, str]]) -> str:
        rubric_lines = "\n".join(f"Rubric {rid}: {text}" for rid, text in rubrics)
        return self._ask(
            "rubric_verify",
            {"task": task, "trace": rendered_trace, "rubrics": rubric_lines},
        )
