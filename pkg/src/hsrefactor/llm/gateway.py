"""Gateway: send prompts, enforce the output contract, keep transcripts."""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from hsrefactor.llm.backends import Backend
from hsrefactor.llm.parsing import SchemaViolation, parse_structured
from hsrefactor.llm.prompt import DEFAULT_CONTEXT_BUDGET, Prompt

log = logging.getLogger(__name__)

MAX_RE_ASKS = 2


@dataclass
class Completion:
    raw_text: str
    parsed: Any = None
    input_tokens: int = 0
    output_tokens: int = 0
    latency_ms: int = 0
    re_asks: int = 0
    prompt_hash: str = ""

    @property
    def token_usage(self) -> tuple[int, int]:
        return self.input_tokens, self.output_tokens


@dataclass
class TranscriptEntry:
    run_id: str
    seq: int
    role: str
    prompt_hash: str
    prompt: dict
    completion: dict
    usage: dict
    ts: float

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "seq": self.seq,
            "role": self.role,
            "prompt_hash": self.prompt_hash,
            "prompt": self.prompt,
            "completion": self.completion,
            "usage": self.usage,
            "ts": self.ts,
        }


@dataclass
class Transcript:
    """Append-only record of every completion, one JSON object per line on disk."""

    run_id: str
    entries: list[TranscriptEntry] = field(default_factory=list)
    clock: Callable[[], float] = time.time

    def __post_init__(self):
        self._lock = threading.Lock()

    def append(self, prompt: Prompt, raw_text: str, input_tokens: int, output_tokens: int,
               latency_ms: int) -> TranscriptEntry:
        with self._lock:
            entry = TranscriptEntry(
                run_id=self.run_id,
                seq=len(self.entries),
                role=prompt.role.value,
                prompt_hash=prompt.hash,
                prompt=prompt.to_dict(),
                completion={"raw_text": raw_text, "latency_ms": latency_ms},
                usage={"input": input_tokens, "output": output_tokens},
                ts=self.clock(),
            )
            self.entries.append(entry)
            return entry

    def records(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in self.records())

    def dump(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> Transcript:
        entries = [TranscriptEntry(**json.loads(line)) for line in text.splitlines() if line.strip()]
        run_id = entries[0].run_id if entries else ""
        return cls(run_id, entries)

    @classmethod
    def load(cls, path: str | Path) -> Transcript:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


class Gateway:
    def __init__(self, backend: Backend, transcript: Transcript | None = None,
                 max_re_asks: int = MAX_RE_ASKS, context_budget: int = DEFAULT_CONTEXT_BUDGET):
        self.backend = backend
        self.transcript = transcript
        self.max_re_asks = max_re_asks
        self.context_budget = context_budget
        self.calls = 0
        self.requests = 0

    def complete(self, prompt: Prompt) -> Completion:
        """Ask the backend, re-asking with the schema error up to ``max_re_asks`` times.

        ``requests`` counts invocations of this method, ``calls`` counts backend round trips.
        """
        self.requests += 1
        current = prompt
        for attempt in range(self.max_re_asks + 1):
            current.check_budget(self.context_budget)
            raw = self.backend.complete(current)
            self.calls += 1
            if self.transcript is not None:
                self.transcript.append(current, raw.text, raw.input_tokens, raw.output_tokens, raw.latency_ms)
            try:
                parsed = parse_structured(raw.text, current.role)
            except SchemaViolation as exc:
                log.info("%s answer rejected (%s), attempt %d", current.role.value, exc.detail, attempt + 1)
                if attempt == self.max_re_asks:
                    raise
                current = prompt.with_feedback(
                    f"Your previous answer could not be used: {exc.detail}. Answer again in the required format."
                )
                continue
            return Completion(raw.text, parsed, raw.input_tokens, raw.output_tokens, raw.latency_ms,
                              attempt, current.hash)
        raise AssertionError("unreachable")


def complete(prompt: Prompt, backend: Backend, transcript: Transcript | None = None) -> Completion:
    return Gateway(backend, transcript).complete(prompt)
