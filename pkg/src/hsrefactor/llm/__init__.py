"""Model gateway: prompts, output contracts, backends and transcripts."""

from hsrefactor.llm.backends import (
    API_KEY_ENV,
    Backend,
    BackendUnavailable,
    HttpBackend,
    RawCompletion,
    ReplayBackend,
    ReplayMiss,
    ScriptedBackend,
    redact,
)
from hsrefactor.llm.gateway import Completion, Gateway, Transcript, TranscriptEntry, complete
from hsrefactor.llm.parsing import SchemaViolation, fenced_block, parse_structured, split_files
from hsrefactor.llm.prompt import DEFAULT_CONTEXT_BUDGET, Prompt, PromptTooLarge
from hsrefactor.llm.templates import MissingArtifact, render_prompt

__all__ = [
    "API_KEY_ENV", "Backend", "BackendUnavailable", "Completion", "DEFAULT_CONTEXT_BUDGET",
    "Gateway", "HttpBackend", "MissingArtifact", "Prompt", "PromptTooLarge", "RawCompletion",
    "ReplayBackend", "ReplayMiss", "SchemaViolation", "ScriptedBackend", "Transcript",
    "TranscriptEntry", "complete", "fenced_block", "parse_structured", "redact",
    "render_prompt", "split_files",
]
