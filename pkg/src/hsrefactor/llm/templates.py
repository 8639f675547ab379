"""Per-role prompt rendering.

Rendering is a pure function of its inputs: keys are sorted, no clocks or
random values are consulted, so equal inputs give byte-identical prompts.
"""

from __future__ import annotations

import json
from decimal import Decimal

from pydantic import BaseModel

from hsrefactor.artifacts import AgentRole
from hsrefactor.errors import HsRefactorError
from hsrefactor.llm.parsing import ANSWER_MODELS
from hsrefactor.llm.prompt import DEFAULT_CONTEXT_BUDGET, Prompt


class MissingArtifact(HsRefactorError):
    def __init__(self, kind: str, role: AgentRole):
        super().__init__(f"{role.value} prompt needs a '{kind}' artifact")
        self.kind = kind
        self.role = role


SYSTEM_TEXT: dict[AgentRole, str] = {
    AgentRole.CONTEXT: (
        "You map the structure of a Haskell codebase. List its modules, the top-level "
        "functions each module defines, the modules it imports and the calls between "
        "functions. Only name things that appear in the supplied sources."
    ),
    AgentRole.CONTEXT_VERIFIER: (
        "You review a structural map of a Haskell codebase against its sources and point "
        "out any module, function or dependency that is missing, invented or misattributed."
    ),
    AgentRole.ANALYSIS: (
        "You look for refactoring opportunities in Haskell code. Use the supplied "
        "complexity figures to point at functions that are hard to follow, deeply nested, "
        "duplicated or too long, and explain briefly why each one matters."
    ),
    AgentRole.ANALYSIS_VERIFIER: (
        "You double-check a list of refactoring hotspots. Flag any hotspot whose "
        "complexity figure disagrees with the measured one or that does not deserve attention."
    ),
    AgentRole.STRATEGY: (
        "You plan refactorings for Haskell code. For the reported hotspots propose concrete "
        "actions such as splitting functions, simplifying expressions, clearer names, "
        "removing duplication, point-free rewrites, module reorganisation or better data "
        "structures. Every action must name an existing function."
    ),
    AgentRole.STRATEGY_VERIFIER: (
        "You judge whether a refactoring plan is feasible and safe: targets must exist, "
        "hotspots must be addressed and exported names must stay reachable."
    ),
    AgentRole.REFACTOR1: (
        "You rewrite Haskell code for readability without changing behaviour: split large "
        "functions, simplify expressions, choose descriptive names and remove duplication. "
        "Return complete files."
    ),
    AgentRole.REFACTOR2: (
        "You rewrite Haskell code for performance and style without changing behaviour: "
        "point-free composition where it reads well, tidy module layout and suitable data "
        "structures. Return complete files."
    ),
    AgentRole.DEBUG: (
        "You repair Haskell code that fails to compile or fails its tests after a "
        "refactoring. Make the smallest change that fixes the reported problems and "
        "return complete files."
    ),
}

REQUIRED: dict[AgentRole, tuple[str, ...]] = {
    AgentRole.CONTEXT: ("snapshot",),
    AgentRole.CONTEXT_VERIFIER: ("snapshot", "context"),
    AgentRole.ANALYSIS: ("snapshot", "context", "metrics"),
    AgentRole.ANALYSIS_VERIFIER: ("analysis", "metrics"),
    AgentRole.STRATEGY: ("snapshot", "analysis"),
    AgentRole.STRATEGY_VERIFIER: ("plan", "analysis"),
    AgentRole.REFACTOR1: ("snapshot", "actions"),
    AgentRole.REFACTOR2: ("snapshot", "actions"),
    AgentRole.DEBUG: ("snapshot", "failures"),
}

CODE_FORMAT = (
    "Answer with exactly one fenced code block. Inside it, start every file you change "
    "with a line `-- FILE: <relative path>` followed by the complete new contents of that "
    "file. Do not include files you leave unchanged."
)


def _dump(value) -> str:
    if isinstance(value, BaseModel):
        value = value.model_dump(mode="json")
    elif isinstance(value, list):
        value = [v.model_dump(mode="json") if isinstance(v, BaseModel) else v for v in value]
    return json.dumps(value, indent=2, sort_keys=True, ensure_ascii=False)


def answer_format(role: AgentRole) -> str:
    if role.writes_code:
        return CODE_FORMAT
    schema = ANSWER_MODELS[role].model_json_schema()
    return (
        "Answer with exactly one fenced ```json block holding a single object that "
        "matches this JSON schema:\n"
        f"{json.dumps(schema, indent=2, sort_keys=True)}"
    )


def render_prompt(
    role: AgentRole,
    inputs: dict,
    *,
    temperature: Decimal | None = None,
    max_tokens: int = 4096,
    feedback: str = "",
    budget: int = DEFAULT_CONTEXT_BUDGET,
) -> Prompt:
    """Build the prompt for ``role`` from named input artifacts.

    ``snapshot`` (path -> source) becomes labelled attachments; every other
    artifact is embedded as sorted JSON.
    """
    if role not in SYSTEM_TEXT:
        raise ValueError(f"{role.value} does not consult the model")
    for kind in REQUIRED[role]:
        if inputs.get(kind) is None:
            raise MissingArtifact(kind, role)
    sections = []
    files = inputs.get("snapshot") or {}
    if files:
        sections.append("## Files\n" + "\n".join(f"- {path}" for path in sorted(files)))
    for kind in sorted(k for k in inputs if k != "snapshot" and inputs[k] is not None):
        sections.append(f"## {kind}\n```json\n{_dump(inputs[kind])}\n```")
    if feedback:
        sections.append(f"## Feedback on the previous attempt\n{feedback.strip()}")
    sections.append(f"## Answer format\n{answer_format(role)}")
    if temperature is None:
        temperature = Decimal("0") if role.is_verifier else Decimal("0.2")
    prompt = Prompt(
        role=role,
        system_text=SYSTEM_TEXT[role],
        user_text="\n\n".join(sections) + "\n",
        attachments=tuple((path, files[path]) for path in sorted(files)),
        temperature=temperature,
        max_tokens=max_tokens,
    )
    prompt.check_budget(budget)
    return prompt
