"""Completion backends: live HTTP, transcript replay and scripted fakes."""

from __future__ import annotations

import json
import logging
import os
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from hsrefactor.artifacts import AgentRole
from hsrefactor.errors import HsRefactorError
from hsrefactor.llm.prompt import Prompt

log = logging.getLogger(__name__)

API_KEY_ENV = "LLM_API_KEY"


class BackendUnavailable(HsRefactorError):
    pass


class ReplayMiss(HsRefactorError):
    def __init__(self, role: AgentRole, prompt_hash: str):
        super().__init__(f"no recorded {role.value} completion for prompt {prompt_hash[:12]}")
        self.role = role
        self.prompt_hash = prompt_hash


@dataclass(frozen=True)
class RawCompletion:
    text: str
    input_tokens: int = 0
    output_tokens: int = 0
    latency_ms: int = 0


class Backend(Protocol):
    def complete(self, prompt: Prompt) -> RawCompletion: ...


def redact(text: str, secret: str | None) -> str:
    if secret:
        text = text.replace(secret, "***")
    return text


class HttpBackend:
    """OpenAI-compatible ``/chat/completions`` client.

    The credential is read from the environment only and never logged.
    """

    def __init__(self, base_url: str, model: str, timeout: float = 120.0,
                 api_key_env: str = API_KEY_ENV, client=None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self.api_key_env = api_key_env
        self._client = client

    def _key(self) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise BackendUnavailable(f"environment variable {self.api_key_env} is not set")
        return key

    def complete(self, prompt: Prompt) -> RawCompletion:
        import httpx

        key = self._key()
        body = {
            "model": self.model,
            "messages": prompt.as_messages(),
            "temperature": float(prompt.temperature),
            "max_tokens": prompt.max_tokens,
        }
        headers = {"Authorization": f"Bearer {key}"}
        log.debug("POST %s/chat/completions role=%s headers=%s", self.base_url, prompt.role.value,
                  redact(json.dumps(headers), key))
        client = self._client or httpx.Client(timeout=self.timeout)
        start = time.monotonic()
        try:
            resp = client.post(f"{self.base_url}/chat/completions", json=body, headers=headers)
            resp.raise_for_status()
            data = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise BackendUnavailable(redact(f"completion request failed: {exc}", key)) from exc
        finally:
            if self._client is None:
                client.close()
        latency = int((time.monotonic() - start) * 1000)
        log.debug("response role=%s body=%s", prompt.role.value, redact(json.dumps(data)[:2000], key))
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable("malformed completion response") from exc
        usage = data.get("usage") or {}
        return RawCompletion(text, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)), latency)


class ReplayBackend:
    """Answers from a recorded transcript keyed by (role, prompt hash).

    Repeated keys are served in recorded order. Never touches the network.
    """

    def __init__(self, records: list[dict]):
        self._queues: dict[tuple[str, str], deque] = defaultdict(deque)
        for rec in sorted(records, key=lambda r: r.get("seq", 0)):
            comp = rec["completion"]
            usage = rec.get("usage") or {}
            self._queues[(rec["role"], rec["prompt_hash"])].append(
                RawCompletion(comp["raw_text"], int(usage.get("input", 0)), int(usage.get("output", 0)), 0)
            )

    @classmethod
    def from_file(cls, path: str | Path) -> ReplayBackend:
        from hsrefactor.llm.gateway import Transcript

        return cls(Transcript.load(path).records())

    def complete(self, prompt: Prompt) -> RawCompletion:
        queue = self._queues.get((prompt.role.value, prompt.hash))
        if not queue:
            raise ReplayMiss(prompt.role, prompt.hash)
        return queue.popleft()


class ScriptedBackend:
    """Returns canned answers per role, in order; for tests and fixture building."""

    def __init__(self, script: dict[AgentRole, list[str | Callable[[Prompt], str]]]):
        self._script = {role: deque(answers) for role, answers in script.items()}
        self.prompts: list[Prompt] = []

    def complete(self, prompt: Prompt) -> RawCompletion:
        self.prompts.append(prompt)
        queue = self._script.get(prompt.role)
        if not queue:
            raise BackendUnavailable(f"script has no answer left for {prompt.role.value}")
        answer = queue.popleft()
        if callable(answer):
            answer = answer(prompt)
        return RawCompletion(answer, prompt.size // 4, len(answer) // 4, 0)
