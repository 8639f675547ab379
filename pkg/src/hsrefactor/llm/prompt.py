"""Prompt records, canonical serialization and content hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from decimal import Decimal

from hsrefactor.artifacts import AgentRole
from hsrefactor.errors import HsRefactorError

DEFAULT_CONTEXT_BUDGET = 200_000


class PromptTooLarge(HsRefactorError):
    pass


@dataclass(frozen=True)
class Prompt:
    role: AgentRole
    system_text: str
    user_text: str
    attachments: tuple[tuple[str, str], ...] = ()
    temperature: Decimal = Decimal("0")
    max_tokens: int = 4096

    def __post_init__(self):
        labels = [label for label, _ in self.attachments]
        if len(set(labels)) != len(labels):
            raise ValueError("attachment labels must be unique")

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "system_text": self.system_text,
            "user_text": self.user_text,
            "attachments": [[label, content] for label, content in self.attachments],
            "temperature": str(self.temperature),
            "max_tokens": self.max_tokens,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Prompt:
        return cls(
            AgentRole(data["role"]),
            data["system_text"],
            data["user_text"],
            tuple((a, b) for a, b in data.get("attachments", [])),
            Decimal(str(data.get("temperature", "0"))),
            int(data.get("max_tokens", 4096)),
        )

    def canonical(self) -> str:
        return json.dumps(_normalize(self.to_dict()), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @property
    def size(self) -> int:
        return len(self.system_text) + len(self.user_text) + sum(len(a) + len(b) for a, b in self.attachments)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def with_feedback(self, feedback: str) -> Prompt:
        return replace(self, user_text=f"{self.user_text}\n\n## Correction needed\n{feedback.strip()}\n")

    def check_budget(self, budget: int = DEFAULT_CONTEXT_BUDGET) -> None:
        if self.size > budget:
            raise PromptTooLarge(f"{self.role.value} prompt is {self.size} chars, budget is {budget}")

    def as_messages(self) -> list[dict]:
        parts = [self.user_text]
        for label, content in self.attachments:
            parts.append(f"### {label}\n```\n{content}\n```")
        return [
            {"role": "system", "content": self.system_text},
            {"role": "user", "content": "\n\n".join(parts)},
        ]


def _normalize(value):
    if isinstance(value, str):
        text = value.replace("\r\n", "\n")
        return "\n".join(line.rstrip() for line in text.split("\n"))
    if isinstance(value, list):
        return [_normalize(v) for v in value]
    if isinstance(value, dict):
        return {k: _normalize(v) for k, v in value.items()}
    return value


def prompt_hash(prompt: Prompt) -> str:
    return prompt.hash
