"""Typed artifacts exchanged between pipeline stages and the model gateway."""

from __future__ import annotations

import enum
import hashlib
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AgentRole(str, enum.Enum):
    CONTEXT = "Context"
    CONTEXT_VERIFIER = "ContextVerifier"
    ANALYSIS = "Analysis"
    ANALYSIS_VERIFIER = "AnalysisVerifier"
    STRATEGY = "Strategy"
    STRATEGY_VERIFIER = "StrategyVerifier"
    REFACTOR1 = "Refactor1"
    REFACTOR2 = "Refactor2"
    TEST_VALIDATE = "TestValidate"
    DEBUG = "Debug"

    @property
    def index(self) -> int:
        return list(AgentRole).index(self) + 1

    @property
    def is_verifier(self) -> bool:
        return self.value.endswith("Verifier")

    @property
    def writes_code(self) -> bool:
        return self in (AgentRole.REFACTOR1, AgentRole.REFACTOR2, AgentRole.DEBUG)


PIPELINE_ORDER: tuple[AgentRole, ...] = tuple(AgentRole)


class Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# context


class ModuleSummary(Model):
    name: str
    file: str = ""
    functions: list[str] = Field(default_factory=list)
    imports: list[str] = Field(default_factory=list)


class DependencyEdge(Model):
    source: str
    target: str
    kind: Literal["import", "call"] = "call"


class ContextAnswer(Model):
    """What the context agent returns."""

    modules: list[ModuleSummary] = Field(default_factory=list)
    dependency_edges: list[DependencyEdge] = Field(default_factory=list)
    narrative: str = ""


class ContextReport(Model):
    modules: list[ModuleSummary]
    dependency_edges: list[DependencyEdge] = Field(default_factory=list)
    narrative: str = ""

    def module(self, name: str) -> ModuleSummary | None:
        return next((m for m in self.modules if m.name == name), None)


# analysis

IssueTag = Literal["deep-nesting", "duplication", "long-function"]


class HotspotClaim(Model):
    function: str
    claimed_cc: int | None = None
    rationale: str = ""


class IssueFlag(Model):
    function: str
    tag: IssueTag


class AnalysisAnswer(Model):
    hotspots: list[HotspotClaim] = Field(default_factory=list)
    flags: list[IssueFlag] = Field(default_factory=list)
    summary: str = ""


class Hotspot(Model):
    function: str
    cc: int | None
    rank: int
    rationale: str = ""
    claimed_cc: int | None = None


class AnalysisReport(Model):
    hotspots: list[Hotspot] = Field(default_factory=list)
    module_metrics: dict[str, int] = Field(default_factory=dict)
    flags: list[IssueFlag] = Field(default_factory=list)
    threshold: int = 5
    summary: str = ""

    @property
    def total(self) -> int:
        return sum(self.module_metrics.values())


# strategy


class ActionKind(str, enum.Enum):
    DECOMPOSE_FUNCTION = "DecomposeFunction"
    SIMPLIFY_EXPRESSION = "SimplifyExpression"
    RENAME_FOR_CLARITY = "RenameForClarity"
    ELIMINATE_DUPLICATION = "EliminateDuplication"
    POINT_FREE_REWRITE = "PointFreeRewrite"
    REORGANIZE_MODULE = "ReorganizeModule"
    OPTIMIZE_DATA_STRUCTURE = "OptimizeDataStructure"


STAGE1_KINDS = frozenset({
    ActionKind.DECOMPOSE_FUNCTION,
    ActionKind.SIMPLIFY_EXPRESSION,
    ActionKind.RENAME_FOR_CLARITY,
    ActionKind.ELIMINATE_DUPLICATION,
})
STAGE2_KINDS = frozenset(set(ActionKind) - STAGE1_KINDS)


class ExpectedEffect(Model):
    metric: Literal["cc", "runtime", "memory", "hlint", "readability"]
    direction: Literal["decrease", "increase", "neutral"]


class RefactorAction(Model):
    kind: ActionKind
    target: str
    description: str = ""
    expected_effect: ExpectedEffect = ExpectedEffect(metric="cc", direction="decrease")
    destination: str | None = None


class RefactorPlan(Model):
    actions: list[RefactorAction] = Field(min_length=1)

    def for_stage(self, stage: int) -> list[RefactorAction]:
        kinds = STAGE1_KINDS if stage == 1 else STAGE2_KINDS
        return [a for a in self.actions if a.kind in kinds]


# verdicts


class Decision(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


class Finding(Model):
    severity: Literal["error", "warning", "advisory"] = "error"
    code: str = ""
    message: str


class OpinionAnswer(Model):
    """A verifier agent's own opinion; advisory only."""

    decision: Decision
    findings: list[Finding] = Field(default_factory=list)


class VerifierVerdict(Model):
    decision: Decision
    findings: list[Finding] = Field(default_factory=list)
    feedback_for_retry: str = ""

    @model_validator(mode="after")
    def _reject_has_findings(self):
        if self.decision is Decision.REJECT and not self.findings:
            raise ValueError("a rejection needs at least one finding")
        return self

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.ACCEPT

    @classmethod
    def from_findings(cls, findings: list[Finding]) -> VerifierVerdict:
        errors = [f for f in findings if f.severity == "error"]
        if not errors:
            return cls(decision=Decision.ACCEPT, findings=findings)
        feedback = "\n".join(f"- [{f.code}] {f.message}" for f in errors)
        return cls(decision=Decision.REJECT, findings=findings, feedback_for_retry=feedback)


# candidates and validation


def files_hash(files: dict[str, str]) -> str:
    h = hashlib.sha256()
    for path in sorted(files):
        data = files[path].encode("utf-8")
        h.update(path.encode("utf-8") + b"\0" + str(len(data)).encode() + b"\0" + data)
    return h.hexdigest()


class CandidateSnapshot(Model):
    files: dict[str, str]
    provenance: str
    diff_summary: list[str] = Field(default_factory=list)

    @property
    def content_hash(self) -> str:
        return files_hash(self.files)


class ValidationReport(Model):
    passed: bool
    compile_ok: bool
    diagnostics: list[str] = Field(default_factory=list)
    tests: dict = Field(default_factory=dict)
    failures: list[str] = Field(default_factory=list)
    hlint_hints: int | None = None
    profile: dict | None = None
    notes: list[str] = Field(default_factory=list)
    environment_error: str | None = None


class Outcome(Model):
    status: Literal["Running", "Succeeded", "Aborted"]
    stage: AgentRole | None = None
    reason: str = ""
