"""Individual pipeline stages and the deterministic checks behind each verifier."""

from __future__ import annotations

import difflib
import json
import logging
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Generic, TypeVar

from hsrefactor.artifacts import (
    ActionKind,
    AgentRole,
    AnalysisAnswer,
    AnalysisReport,
    CandidateSnapshot,
    ContextAnswer,
    ContextReport,
    Finding,
    Hotspot,
    ModuleSummary,
    OpinionAnswer,
    RefactorAction,
    RefactorPlan,
    ValidationReport,
    VerifierVerdict,
)
from hsrefactor.corpus import write_files
from hsrefactor.errors import HsRefactorError, NoSources
from hsrefactor.llm import BackendUnavailable, Completion, Gateway, Prompt, ReplayMiss, SchemaViolation, render_prompt
from hsrefactor.pipeline.facts import CodeFacts, build_facts
from hsrefactor.syntax import LexError, ParseError, parse_module
from hsrefactor.toolchain import (
    CommandRunner,
    ToolConfig,
    ToolError,
    ToolNotFound,
    ReplayMiss as ToolReplayMiss,
    run_compile,
    run_hlint,
    run_profile,
    run_tests,
)

log = logging.getLogger(__name__)

T = TypeVar("T")


class CandidateError(HsRefactorError):
    reason = "InvalidCandidate"


class ScopeViolation(CandidateError):
    reason = "ScopeViolation"


class UnparseableCandidate(CandidateError):
    reason = "UnparseableCandidate"


@dataclass
class Exchange:
    prompt: Prompt
    completion: Completion


@dataclass
class StageResult(Generic[T]):
    value: T
    exchanges: list[Exchange] = field(default_factory=list)


def _ask(gateway: Gateway, role: AgentRole, inputs: dict, feedback: str, max_tokens: int) -> Exchange:
    prompt = render_prompt(role, inputs, feedback=feedback, max_tokens=max_tokens, budget=gateway.context_budget)
    return Exchange(prompt, gateway.complete(prompt))


# context


def context_stage(files: dict[str, str], facts: CodeFacts, gateway: Gateway, feedback: str = "",
                  max_tokens: int = 4096) -> StageResult[ContextReport]:
    """Structural map of the codebase.

    Parser facts form the base; the model's claims are merged on top so that
    anything it invents is visible to the verifier.
    """
    if not files:
        raise NoSources("the snapshot has no source files")
    ex = _ask(gateway, AgentRole.CONTEXT, {"snapshot": files, "parser_facts": facts.summary()}, feedback, max_tokens)
    answer: ContextAnswer = ex.completion.parsed
    modules = {name: m.model_dump() for name, m in facts.modules.items()}
    extra_modules = []
    for claim in answer.modules:
        if claim.name in modules:
            known = modules[claim.name]
            known["functions"] += [f for f in claim.functions if f not in known["functions"]]
            known["imports"] += [i for i in claim.imports if i not in known["imports"]]
        else:
            extra_modules.append(claim)
    edges = facts.edge_models()
    seen = {(e.source, e.target, e.kind) for e in edges}
    for e in answer.dependency_edges:
        if (e.source, e.target, e.kind) not in seen:
            seen.add((e.source, e.target, e.kind))
            edges.append(e)
    report = ContextReport(
        modules=[ModuleSummary(**m) for m in modules.values()] + extra_modules,
        dependency_edges=edges,
        narrative=answer.narrative,
    )
    return StageResult(report, [ex])


def check_context(report: ContextReport, facts: CodeFacts) -> list[Finding]:
    findings = []
    for m in report.modules:
        known = facts.modules.get(m.name)
        if known is None:
            findings.append(Finding(code="UnknownModule", message=f"module {m.name} does not exist"))
            continue
        for fn in m.functions:
            if fn not in known.functions:
                findings.append(Finding(code="UnknownFunction",
                                        message=f"{m.name} does not define a function named {fn}"))
        for fn in known.functions:
            if fn not in m.functions:
                findings.append(Finding(code="MissingFunction", message=f"{m.name}.{fn} is missing"))
        for imp in m.imports:
            if imp not in known.imports:
                findings.append(Finding(code="UnknownImport", message=f"{m.name} does not import {imp}"))
    listed = {m.name for m in report.modules}
    for name in facts.modules:
        if name not in listed:
            findings.append(Finding(code="MissingModule", message=f"module {name} is missing"))
    for e in report.dependency_edges:
        if (e.source, e.target, e.kind) not in facts.edges:
            findings.append(Finding(code="UnsupportedEdge",
                                    message=f"no {e.kind} dependency from {e.source} to {e.target} in the sources"))
    return findings


def verify_context(report: ContextReport, facts: CodeFacts) -> VerifierVerdict:
    return VerifierVerdict.from_findings(check_context(report, facts))


# analysis


def analysis_stage(files: dict[str, str], facts: CodeFacts, context: ContextReport, gateway: Gateway,
                   threshold: int, feedback: str = "", max_tokens: int = 4096) -> StageResult[AnalysisReport]:
    """Hotspots: every function at or above ``threshold`` plus whatever the model names."""
    metrics = facts.cc_map()
    inputs = {"snapshot": files, "context": context,
              "metrics": {"cc": metrics, "threshold": threshold}}
    ex = _ask(gateway, AgentRole.ANALYSIS, inputs, feedback, max_tokens)
    answer: AnalysisAnswer = ex.completion.parsed
    entries: dict[str, dict] = {
        q: {"function": q, "cc": cc, "rationale": "", "claimed_cc": None}
        for q, cc in metrics.items() if cc >= threshold
    }
    for claim in answer.hotspots:
        qualified = facts.resolve(claim.function) or claim.function
        entry = entries.setdefault(
            qualified, {"function": qualified, "cc": metrics.get(qualified), "rationale": "", "claimed_cc": None}
        )
        entry["rationale"] = claim.rationale
        entry["claimed_cc"] = claim.claimed_cc

    def order(entry):
        info = facts.functions.get(entry["function"])
        position = info.position if info else (len(files), 0)
        return (-(entry["cc"] or 0), position, entry["function"])

    hotspots = [Hotspot(rank=i, **e) for i, e in enumerate(sorted(entries.values(), key=order), start=1)]
    flags = [f.model_copy(update={"function": facts.resolve(f.function) or f.function}) for f in answer.flags]
    report = AnalysisReport(hotspots=hotspots, module_metrics=metrics, flags=flags,
                            threshold=threshold, summary=answer.summary)
    return StageResult(report, [ex])


def check_analysis(report: AnalysisReport, facts: CodeFacts, threshold: int) -> list[Finding]:
    findings = []
    metrics = facts.cc_map()
    for name, cc in report.module_metrics.items():
        if metrics.get(name) != cc:
            findings.append(Finding(code="CcMismatch",
                                    message=f"{name} is reported with CC {cc}, recomputation gives {metrics.get(name)}"))
    for h in report.hotspots:
        actual = metrics.get(h.function)
        if actual is None:
            findings.append(Finding(code="UnknownFunction", message=f"hotspot {h.function} does not exist"))
            continue
        for label, value in (("measured", h.cc), ("claimed", h.claimed_cc)):
            if value is not None and value != actual:
                findings.append(Finding(
                    code="CcMismatch",
                    message=f"hotspot {h.function} has {label} CC {value}, recomputation gives {actual}",
                ))
        if actual < threshold:
            findings.append(Finding(code="FalsePositive",
                                    message=f"hotspot {h.function} has CC {actual}, below the threshold {threshold}"))
    ccs = [metrics.get(h.function) or 0 for h in report.hotspots]
    if ccs != sorted(ccs, reverse=True):
        findings.append(Finding(code="Unsorted", message="hotspots are not ordered by descending CC"))
    listed = {h.function for h in report.hotspots}
    for name, cc in metrics.items():
        if cc >= threshold and name not in listed:
            findings.append(Finding(severity="warning", code="MissedHotspot",
                                    message=f"{name} has CC {cc} but is not listed"))
    return findings


def verify_analysis(report: AnalysisReport, facts: CodeFacts, threshold: int) -> VerifierVerdict:
    return VerifierVerdict.from_findings(check_analysis(report, facts, threshold))


# strategy


def strategy_stage(files: dict[str, str], analysis: AnalysisReport, gateway: Gateway, feedback: str = "",
                   max_tokens: int = 4096) -> StageResult[RefactorPlan]:
    ex = _ask(gateway, AgentRole.STRATEGY, {"snapshot": files, "analysis": analysis}, feedback, max_tokens)
    return StageResult(ex.completion.parsed, [ex])


def _exporting_module(facts: CodeFacts, qualified: str) -> str | None:
    module, _, name = qualified.rpartition(".")
    exports = facts.exports.get(module)
    return module if exports is not None and name in exports else None


def check_strategy(plan: RefactorPlan, analysis: AnalysisReport, facts: CodeFacts) -> list[Finding]:
    findings = []
    hotspots = {h.function for h in analysis.hotspots}
    covered = False
    for action in plan.actions:
        qualified = facts.resolve(action.target)
        if qualified is None:
            findings.append(Finding(code="UnknownTarget",
                                    message=f"{action.kind.value} targets {action.target}, which does not exist"))
            continue
        covered = covered or qualified in hotspots
        if action.kind is ActionKind.REORGANIZE_MODULE:
            home = _exporting_module(facts, qualified)
            if home is not None and action.destination not in (None, home):
                findings.append(Finding(
                    code="OrphanedExport",
                    message=f"moving {qualified} to {action.destination} would orphan a name exported by {home}",
                ))
    if hotspots and not covered:
        findings.append(Finding(code="NoHotspotCoverage", message="no action addresses a reported hotspot"))
    return findings


def verify_strategy(plan: RefactorPlan, analysis: AnalysisReport, facts: CodeFacts) -> VerifierVerdict:
    return VerifierVerdict.from_findings(check_strategy(plan, analysis, facts))


# verifier opinions


def opinion(role: AgentRole, inputs: dict, findings: list[Finding], gateway: Gateway,
            max_tokens: int = 4096) -> tuple[list[Finding], list[Exchange]]:
    """Ask the verifier agent for its view. Its findings are advisory only."""
    try:
        prompt = render_prompt(role, {**inputs, "checks": findings}, max_tokens=max_tokens,
                               budget=gateway.context_budget)
        completion = gateway.complete(prompt)
    except (SchemaViolation, ReplayMiss, BackendUnavailable) as exc:
        log.info("%s opinion unavailable: %s", role.value, exc)
        return [Finding(severity="advisory", code="OpinionUnavailable", message=type(exc).__name__)], []
    answer: OpinionAnswer = completion.parsed
    advisory = [f.model_copy(update={"severity": "advisory"}) for f in answer.findings]
    return advisory, [Exchange(prompt, completion)]


# code-writing stages


def _names(actions: list[RefactorAction], facts: CodeFacts) -> set[str]:
    out = set()
    for a in actions:
        qualified = facts.resolve(a.target) or a.target
        out.add(qualified.rpartition(".")[2])
    return out


def _mentions(source: str, names: set[str]) -> bool:
    return any(re.search(rf"(?<![\w']){re.escape(n)}(?![\w'])", source) for n in names)


def diff_summary(before: dict[str, str], after: dict[str, str]) -> list[str]:
    out = []
    for path in sorted(set(before) | set(after)):
        old, new = before.get(path), after.get(path)
        if old == new:
            continue
        if old is None:
            out.append(f"A {path} (+{len(new.splitlines())})")
            continue
        added = removed = 0
        for line in difflib.unified_diff(old.splitlines(), new.splitlines(), lineterm="", n=0):
            if line.startswith("+") and not line.startswith("+++"):
                added += 1
            elif line.startswith("-") and not line.startswith("---"):
                removed += 1
        out.append(f"M {path} (+{added} -{removed})")
    return out


def apply_changes(parent: CandidateSnapshot, changes: dict[str, str], allowed: set[str], allow_new: bool,
                  provenance: str) -> CandidateSnapshot:
    """New candidate with ``changes`` applied, after scope and parse checks."""
    for path in sorted(changes):
        if path in parent.files:
            if path not in allowed:
                raise ScopeViolation(f"{path} is outside the files this stage may change")
        elif not allow_new:
            raise ScopeViolation(f"{path} is a new file, which this stage may not create")
        if path.endswith(".hs"):
            try:
                parse_module(changes[path], path)
            except (ParseError, LexError) as exc:
                raise UnparseableCandidate(f"{path} does not parse: {exc}") from exc
    files = {**parent.files, **changes}
    files = {p: files[p] for p in sorted(files)}
    return CandidateSnapshot(files=files, provenance=provenance, diff_summary=diff_summary(parent.files, files))


def refactor_stage(stage: int, parent: CandidateSnapshot, plan: RefactorPlan, facts: CodeFacts,
                   gateway: Gateway, feedback: str = "", max_tokens: int = 4096) -> StageResult[CandidateSnapshot]:
    """Apply the plan's actions for ``stage`` (1 or 2). No actions means no change and no model call."""
    role = AgentRole.REFACTOR1 if stage == 1 else AgentRole.REFACTOR2
    actions = plan.for_stage(stage)
    if not actions:
        return StageResult(parent.model_copy(update={"provenance": f"{role.value}: no actions",
                                                     "diff_summary": []}))
    names = _names(actions, facts)
    homes = {facts.files_defining(facts.resolve(a.target) or "") for a in actions}
    scope = {p for p, src in parent.files.items() if p in homes or _mentions(src, names)}
    allow_new = any(a.kind is ActionKind.REORGANIZE_MODULE for a in actions)
    inputs = {"snapshot": {p: parent.files[p] for p in sorted(scope)}, "actions": actions}
    ex = _ask(gateway, role, inputs, feedback, max_tokens)
    candidate = apply_changes(parent, ex.completion.parsed, scope, allow_new, role.value)
    return StageResult(candidate, [ex])


def refactor_stage1(parent: CandidateSnapshot, plan: RefactorPlan, facts: CodeFacts, gateway: Gateway,
                    feedback: str = "", max_tokens: int = 4096) -> StageResult[CandidateSnapshot]:
    """Readability pass: decomposition, simplification, renaming, de-duplication."""
    return refactor_stage(1, parent, plan, facts, gateway, feedback, max_tokens)


def refactor_stage2(parent: CandidateSnapshot, plan: RefactorPlan, facts: CodeFacts, gateway: Gateway,
                    feedback: str = "", max_tokens: int = 4096) -> StageResult[CandidateSnapshot]:
    """Performance and style pass: point-free rewrites, module layout, data structures."""
    return refactor_stage(2, parent, plan, facts, gateway, feedback, max_tokens)


def debug_stage(candidate: CandidateSnapshot, validation: ValidationReport, gateway: Gateway,
                feedback: str = "", max_tokens: int = 4096) -> StageResult[CandidateSnapshot]:
    if validation.passed or not validation.failures:
        raise ValueError("debugging needs a failed validation")
    inputs = {"snapshot": candidate.files, "failures": validation.failures}
    ex = _ask(gateway, AgentRole.DEBUG, inputs, feedback, max_tokens)
    fixed = apply_changes(candidate, ex.completion.parsed, set(candidate.files), False, AgentRole.DEBUG.value)
    return StageResult(fixed, [ex])


# validation


# Faults of the environment rather than of the candidate; no code change can fix them.
ENVIRONMENT_ERRORS = (ToolNotFound, ToolReplayMiss)


def test_and_validate(candidate: CandidateSnapshot, runner: CommandRunner, tools: ToolConfig,
                      log_dir: Path | None = None) -> ValidationReport:
    """Compile, test, lint and profile ``candidate`` in a scratch directory.

    Tool errors are recorded in the report, never raised.
    """
    try:
        return _validate(candidate, runner, tools, log_dir)
    except ENVIRONMENT_ERRORS as exc:
        return ValidationReport(passed=False, compile_ok=False, failures=[f"{type(exc).__name__}: {exc}"],
                                environment_error=type(exc).__name__)


def _validate(candidate: CandidateSnapshot, runner: CommandRunner, tools: ToolConfig,
              log_dir: Path | None) -> ValidationReport:
    notes: list[str] = []
    failures: list[str] = []
    tests: dict = {}
    hints = profile = None
    with tempfile.TemporaryDirectory(prefix="hsrefactor-") as tmp:
        work = Path(tmp)
        write_files(work, candidate.files)
        try:
            compiled = run_compile(work, runner, tools, log_dir)
        except ENVIRONMENT_ERRORS:
            raise
        except ToolError as exc:
            return ValidationReport(passed=False, compile_ok=False, failures=[f"compile: {exc}"])
        diagnostics = [f"{d.file}:{d.line}: {d.severity}: {d.message}" for d in compiled.diagnostics]
        if not compiled.success:
            failures = [f"{d.file}:{d.line}: {d.message}" for d in compiled.errors] or [compiled.output.strip()]
        else:
            try:
                result = run_tests(work, runner, tools, log_dir)
            except ENVIRONMENT_ERRORS:
                raise
            except ToolError as exc:
                failures.append(f"tests: {exc}")
            else:
                tests = {"total": result.total, "passed": result.passed, "failed": result.failed,
                         "skipped": result.skipped}
                failures += [f"test {name}" + (f": {detail}" if detail else "") for name, detail in result.failures]
        try:
            hints = run_hlint(work, runner, tools, log_dir).hint_count
        except ENVIRONMENT_ERRORS:
            raise
        except ToolError as exc:
            notes.append(f"hlint: {exc}")
        if compiled.success:
            try:
                profile = run_profile(work, runner, tools, log_dir).to_dict()
            except ENVIRONMENT_ERRORS:
                raise
            except ToolError as exc:
                notes.append(f"profile: {exc}")
    return ValidationReport(
        passed=compiled.success and not failures,
        compile_ok=compiled.success,
        diagnostics=diagnostics,
        tests=tests,
        failures=failures,
        hlint_hints=hints,
        profile=profile,
        notes=notes,
    )


test_and_validate.__test__ = False


def verdict(findings: list[Finding]) -> VerifierVerdict:
    return VerifierVerdict.from_findings(findings)


def to_json(value) -> str:
    if hasattr(value, "model_dump"):
        value = value.model_dump(mode="json")
    return json.dumps(value, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


__all__ = [
    "CandidateError", "CodeFacts", "Exchange", "ScopeViolation", "StageResult", "UnparseableCandidate",
    "analysis_stage", "apply_changes", "build_facts", "check_analysis", "check_context", "check_strategy",
    "context_stage", "debug_stage", "diff_summary", "opinion", "refactor_stage", "strategy_stage",
    "refactor_stage1", "refactor_stage2", "test_and_validate", "to_json", "verdict", "verify_analysis",
    "verify_context", "verify_strategy",
]
