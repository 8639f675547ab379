"""Extract and validate the structured part of a model answer."""

from __future__ import annotations

import json
import re

from pydantic import BaseModel, ValidationError

from hsrefactor.artifacts import AgentRole, AnalysisAnswer, ContextAnswer, OpinionAnswer, RefactorPlan
from hsrefactor.errors import HsRefactorError

FENCE = re.compile(r"^```[ \t]*([\w+-]*)[ \t]*\n(.*?)^```[ \t]*$", re.MULTILINE | re.DOTALL)
FILE_MARKER = re.compile(r"^-- FILE: (\S+)[ \t]*$", re.MULTILINE)

ANSWER_MODELS: dict[AgentRole, type[BaseModel]] = {
    AgentRole.CONTEXT: ContextAnswer,
    AgentRole.ANALYSIS: AnalysisAnswer,
    AgentRole.STRATEGY: RefactorPlan,
    AgentRole.CONTEXT_VERIFIER: OpinionAnswer,
    AgentRole.ANALYSIS_VERIFIER: OpinionAnswer,
    AgentRole.STRATEGY_VERIFIER: OpinionAnswer,
}


class SchemaViolation(HsRefactorError):
    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


def fenced_block(raw: str) -> str:
    blocks = FENCE.findall(raw)
    if not blocks:
        raise SchemaViolation("answer must contain exactly one fenced block; found none")
    if len(blocks) > 1:
        raise SchemaViolation(f"answer must contain exactly one fenced block; found {len(blocks)}")
    return blocks[0][1]


def split_files(block: str) -> dict[str, str]:
    """Split ``-- FILE: path`` sections into a path -> source map."""
    marks = list(FILE_MARKER.finditer(block))
    if not marks:
        raise SchemaViolation("code answer must start each file with '-- FILE: <path>'")
    if block[: marks[0].start()].strip():
        raise SchemaViolation("text before the first '-- FILE:' marker")
    files: dict[str, str] = {}
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(block)
        path = m.group(1)
        if path in files:
            raise SchemaViolation(f"file {path} appears twice")
        if path.startswith("/") or ".." in path.split("/"):
            raise SchemaViolation(f"file path {path} leaves the project")
        body = block[m.end():end].lstrip("\n")
        files[path] = body if body.endswith("\n") else body + "\n"
    return files


def parse_structured(raw: str, role: AgentRole):
    """Payload of ``raw`` for ``role``: a pydantic model, or a file map for code roles."""
    block = fenced_block(raw)
    if role.writes_code:
        return split_files(block)
    model = ANSWER_MODELS.get(role)
    if model is None:
        raise SchemaViolation(f"{role.value} does not take model answers")
    try:
        data = json.loads(block)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"block is not valid JSON: {exc}") from exc
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
        )
        raise SchemaViolation(f"{role.value} answer does not match its schema: {problems}") from exc
