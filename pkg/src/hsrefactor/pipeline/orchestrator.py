"""Runs the agent stages in order with bounded retries and debug loops."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from hsrefactor.artifacts import (
    AgentRole,
    AnalysisReport,
    CandidateSnapshot,
    ContextReport,
    Outcome,
    RefactorPlan,
    ValidationReport,
    VerifierVerdict,
)
from hsrefactor.corpus import CodebaseSnapshot, MetricsRecord, MetricsStore, Phase, write_files
from hsrefactor.errors import HsRefactorError
from hsrefactor.llm import BackendUnavailable, Gateway, PromptTooLarge, ReplayMiss, SchemaViolation
from hsrefactor.pipeline.config import PipelineConfig
from hsrefactor.pipeline.facts import CodeFacts, build_facts
from hsrefactor.pipeline.stages import (
    ENVIRONMENT_ERRORS,
    CandidateError,
    StageResult,
    analysis_stage,
    check_analysis,
    check_context,
    check_strategy,
    context_stage,
    debug_stage,
    opinion,
    refactor_stage,
    strategy_stage,
    test_and_validate,
    to_json,
    verdict,
)
from hsrefactor.reporting import ComparisonTable, build_comparison, render_json, render_text
from hsrefactor.toolchain import (
    CommandRunner,
    HlintReport,
    ProfileStats,
    ToolError,
    run_hlint,
    run_profile,
)

log = logging.getLogger(__name__)


class Aborted(HsRefactorError):
    def __init__(self, stage: AgentRole, reason: str, verdict: VerifierVerdict | None = None):
        super().__init__(f"aborted at {stage.value}: {reason}")
        self.stage = stage
        self.reason = reason
        self.verdict = verdict


@dataclass
class PipelineState:
    run_id: str
    current_stage: AgentRole = AgentRole.CONTEXT
    retries_used: dict[str, int] = field(default_factory=dict)
    debug_iterations: int = 0
    outcome: Outcome = field(default_factory=lambda: Outcome(status="Running"))
    artifacts: dict[str, object] = field(default_factory=dict)
    verdicts: list[tuple[AgentRole, VerifierVerdict]] = field(default_factory=list)
    last_verdict: VerifierVerdict | None = None

    def retry(self, role: AgentRole) -> None:
        self.retries_used[role.value] = self.retries_used.get(role.value, 0) + 1


@dataclass
class PipelineResult:
    state: PipelineState
    snapshot: CodebaseSnapshot
    context: ContextReport | None = None
    analysis: AnalysisReport | None = None
    plan: RefactorPlan | None = None
    candidate: CandidateSnapshot | None = None
    validation: ValidationReport | None = None
    pre: MetricsRecord | None = None
    post: MetricsRecord | None = None
    table: ComparisonTable | None = None
    artifact_dir: Path | None = None

    @property
    def outcome(self) -> Outcome:
        return self.state.outcome

    @property
    def succeeded(self) -> bool:
        return self.state.outcome.status == "Succeeded"


def compute_run_id(snapshot: CodebaseSnapshot, config: PipelineConfig) -> str:
    canonical = json.dumps(config.fingerprint(), sort_keys=True, default=str)
    return hashlib.sha256((snapshot.content_hash + canonical).encode("utf-8")).hexdigest()[:12]


class ArtifactWriter:
    """Per-stage artifact directories under ``<root>``; a ``None`` root writes nothing."""

    def __init__(self, root: Path | None):
        self.root = root

    def stage_dir(self, role: AgentRole | str) -> Path | None:
        if self.root is None:
            return None
        name = f"{role.index:02d}-{role.value}" if isinstance(role, AgentRole) else role
        path = self.root / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    def write(self, role: AgentRole | str, name: str, text: str) -> None:
        d = self.stage_dir(role)
        if d is not None:
            (d / name).write_text(text, encoding="utf-8")

    def exchanges(self, role: AgentRole, label: str, result: StageResult) -> None:
        for i, ex in enumerate(result.exchanges, start=1):
            suffix = f"{label}" if len(result.exchanges) == 1 else f"{label}.{i}"
            self.write(role, f"{suffix}.prompt.json",
                       to_json({**ex.prompt.to_dict(), "hash": ex.prompt.hash}))
            self.write(role, f"{suffix}.completion.txt", ex.completion.raw_text)


def _atomic_tree(target: Path, files: dict[str, str]) -> None:
    """Write ``files`` under ``target`` so readers see all of them or none."""
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=target.parent, prefix=f".{target.name}."))
    try:
        write_files(staging, files)
        if target.exists():
            shutil.rmtree(target)
        os.replace(staging, target)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise


class Pipeline:
    def __init__(self, snapshot: CodebaseSnapshot, config: PipelineConfig, gateway: Gateway,
                 runner: CommandRunner | None = None, dry_run: bool = False):
        self.snapshot = snapshot
        self.config = config
        self.gateway = gateway
        self.runner = runner
        self.dry_run = dry_run
        self.run_id = compute_run_id(snapshot, config)
        self.state = PipelineState(self.run_id)
        self.facts: CodeFacts = build_facts(snapshot.files)
        self.result = PipelineResult(self.state, snapshot)
        root = None if dry_run else Path(config.artifact_dir) / self.run_id
        self.writer = ArtifactWriter(root)
        self.store = None if dry_run else MetricsStore(config.store_dir)
        self.result.artifact_dir = root

    # bookkeeping

    def _verify(self, verifier: AgentRole, label: str, findings, inputs: dict) -> VerifierVerdict:
        self.state.current_stage = verifier
        if self.config.verifier_opinions:
            advisory, exchanges = opinion(verifier, inputs, findings, self.gateway, self.config.max_tokens)
            self.writer.exchanges(verifier, label, StageResult(None, exchanges))
            findings = [*findings, *advisory]
        v = verdict(findings)
        self.state.verdicts.append((verifier, v))
        self.state.artifacts[verifier.value] = v
        self.writer.write(verifier, f"{label}.verdict.json", to_json(v))
        log.info("%s %s: %s", verifier.value, label, v.decision.value)
        return v

    def _gate(self, producer: AgentRole, verifier: AgentRole, produce, check, verifier_inputs, kind: str):
        feedback = ""
        for attempt in range(1, self.config.max_retries + 2):
            label = f"attempt-{attempt}"
            self.state.current_stage = producer
            result = produce(feedback)
            self.state.artifacts[producer.value] = result.value
            self.writer.exchanges(producer, label, result)
            self.writer.write(producer, f"{label}.{kind}.json", to_json(result.value))
            v = self._verify(verifier, label, check(result.value), verifier_inputs(result.value))
            if v.accepted:
                return result.value
            if attempt <= self.config.max_retries:
                self.state.retry(producer)
            feedback = v.feedback_for_retry
        raise Aborted(verifier, "RetryBudgetExhausted", v)

    def _candidate(self, role: AgentRole, label: str, make):
        feedback = ""
        for attempt in range(1, self.config.max_candidate_retries + 2):
            self.state.current_stage = role
            try:
                result = make(feedback)
            except CandidateError as exc:
                self.writer.write(role, f"{label}.rejected-{attempt}.txt", f"{exc.reason}: {exc}\n")
                if attempt > self.config.max_candidate_retries:
                    raise Aborted(role, exc.reason) from exc
                self.state.retry(role)
                feedback = f"{exc.reason}: {exc}"
                continue
            self.state.artifacts[role.value] = result.value
            self.writer.exchanges(role, label, result)
            self.writer.write(role, f"{label}.candidate.json", to_json(result.value))
            return result.value
        raise AssertionError("unreachable")

    # stages

    def baseline(self) -> MetricsRecord:
        profile: ProfileStats | None = None
        hlint: HlintReport | None = None
        notes = []
        if self.runner is not None and not self.dry_run:
            log_dir = self.writer.stage_dir("00-Baseline")
            with tempfile.TemporaryDirectory(prefix="hsrefactor-") as tmp:
                write_files(Path(tmp), self.snapshot.files)
                try:
                    hlint = run_hlint(Path(tmp), self.runner, self.config.tools, log_dir)
                except ENVIRONMENT_ERRORS:
                    raise
                except ToolError as exc:
                    notes.append(f"hlint: {exc}")
                try:
                    profile = run_profile(Path(tmp), self.runner, self.config.tools, log_dir)
                except ENVIRONMENT_ERRORS:
                    raise
                except ToolError as exc:
                    notes.append(f"profile: {exc}")
        record = MetricsRecord(
            Phase.PRE, self.facts.cc_total,
            profile.total_time_secs if profile else None, profile.ticks if profile else None,
            profile.total_alloc_bytes if profile else None, hlint.hint_count if hlint else None,
            self.snapshot.id, self.snapshot.content_hash,
        )
        self.writer.write("00-Baseline", "metrics.json", to_json({**record.to_dict(), "notes": notes}))
        if self.store is not None:
            self.store.record(self.run_id, record)
        return record

    def run(self) -> PipelineResult:
        try:
            self._run()
        except Aborted as exc:
            self.state.outcome = Outcome(status="Aborted", stage=exc.stage, reason=exc.reason)
            self.state.last_verdict = exc.verdict
        except SchemaViolation as exc:
            self._abort(f"SchemaViolation: {exc.detail}")
        except (ReplayMiss, BackendUnavailable, PromptTooLarge, *ENVIRONMENT_ERRORS) as exc:
            self._abort(type(exc).__name__)
        log.info("run %s: %s", self.run_id, self.state.outcome)
        if not self.dry_run:
            self._write_report()
        return self.result

    def _abort(self, reason: str) -> None:
        self.state.outcome = Outcome(status="Aborted", stage=self.state.current_stage, reason=reason)

    def _run(self) -> None:
        cfg = self.config
        files = self.snapshot.files
        if self.writer.root is not None:
            shutil.rmtree(self.writer.root, ignore_errors=True)
            self.store.clear_run(self.run_id)
            self.store.save_manifest(self.snapshot)
        self.result.pre = self.baseline()
        facts = self.facts

        context = self._gate(
            AgentRole.CONTEXT, AgentRole.CONTEXT_VERIFIER,
            lambda fb: context_stage(files, facts, self.gateway, fb, cfg.max_tokens),
            lambda r: check_context(r, facts),
            lambda r: {"snapshot": files, "context": r},
            "context",
        )
        self.result.context = context
        analysis = self._gate(
            AgentRole.ANALYSIS, AgentRole.ANALYSIS_VERIFIER,
            lambda fb: analysis_stage(files, facts, context, self.gateway, cfg.cc_hotspot_threshold, fb,
                                      cfg.max_tokens),
            lambda r: check_analysis(r, facts, cfg.cc_hotspot_threshold),
            lambda r: {"analysis": r, "metrics": facts.cc_map()},
            "analysis",
        )
        self.result.analysis = analysis
        plan = self._gate(
            AgentRole.STRATEGY, AgentRole.STRATEGY_VERIFIER,
            lambda fb: strategy_stage(files, analysis, self.gateway, fb, cfg.max_tokens),
            lambda r: check_strategy(r, analysis, facts),
            lambda r: {"plan": r, "analysis": analysis},
            "plan",
        )
        self.result.plan = plan
        if self.dry_run:
            self.state.outcome = Outcome(status="Succeeded", stage=AgentRole.STRATEGY_VERIFIER,
                                         reason="dry run stops after planning")
            return

        candidate = CandidateSnapshot(files=dict(files), provenance="original")
        for stage, role in ((1, AgentRole.REFACTOR1), (2, AgentRole.REFACTOR2)):
            parent = candidate
            candidate = self._candidate(
                role, "result",
                lambda fb, parent=parent, stage=stage: refactor_stage(stage, parent, plan, facts, self.gateway,
                                                                      fb, cfg.max_tokens),
            )

        validation = self._validate(candidate, 1)
        while not validation.passed:
            if self.state.debug_iterations >= cfg.max_debug_loops:
                raise Aborted(AgentRole.DEBUG, "DebugBudgetExhausted")
            self.state.debug_iterations += 1
            k = self.state.debug_iterations
            broken = candidate
            candidate = self._candidate(
                AgentRole.DEBUG, f"iteration-{k}",
                lambda fb, broken=broken, v=validation: debug_stage(broken, v, self.gateway, fb, cfg.max_tokens),
            )
            validation = self._validate(candidate, k + 1)
        self.result.candidate = candidate
        self.result.validation = validation
        self._finish(candidate, validation)

    def _validate(self, candidate: CandidateSnapshot, k: int) -> ValidationReport:
        self.state.current_stage = AgentRole.TEST_VALIDATE
        if self.runner is None:
            raise Aborted(AgentRole.TEST_VALIDATE, "NoToolRunner")
        log_dir = self.writer.stage_dir(AgentRole.TEST_VALIDATE)
        log_dir = log_dir / f"pass-{k}" if log_dir is not None else None
        report = test_and_validate(candidate, self.runner, self.config.tools, log_dir)
        self.state.artifacts[AgentRole.TEST_VALIDATE.value] = report
        if log_dir is not None:
            (log_dir / "validation.json").write_text(to_json(report), encoding="utf-8")
        if report.environment_error:
            raise Aborted(AgentRole.TEST_VALIDATE, report.environment_error)
        log.info("validation pass %d: %s", k, "passed" if report.passed else "failed")
        return report

    def _finish(self, candidate: CandidateSnapshot, validation: ValidationReport) -> None:
        post_cc = build_facts(candidate.files).cc_total
        pre = self.result.pre
        if self.config.strict_non_regression and post_cc > pre.C:
            raise Aborted(AgentRole.TEST_VALIDATE, f"ComplexityRegression: {pre.C} -> {post_cc}")
        profile = ProfileStats.from_dict(validation.profile) if validation.profile else None
        post = MetricsRecord(
            Phase.POST, post_cc,
            profile.total_time_secs if profile else None, profile.ticks if profile else None,
            profile.total_alloc_bytes if profile else None, validation.hlint_hints,
            self.snapshot.id, candidate.content_hash,
        )
        if self.store is not None:
            self.store.record(self.run_id, post)
        self.result.post = post
        self.result.table = build_comparison(pre, post)
        if self.writer.root is not None:
            _atomic_tree(self.writer.root / "output", candidate.files)
        self.state.outcome = Outcome(status="Succeeded", reason="")

    def _write_report(self) -> None:
        if self.writer.root is None:
            return
        self.writer.root.mkdir(parents=True, exist_ok=True)
        meta = report_metadata(self.result)
        (self.writer.root / "report.json").write_text(render_json(self.result.table, meta), encoding="utf-8")
        (self.writer.root / "report.md").write_text(render_text(self.result.table, meta), encoding="utf-8")


def report_metadata(result: PipelineResult) -> dict:
    state = result.state
    return {
        "run_id": state.run_id,
        "snapshot_id": result.snapshot.id,
        "outcome": state.outcome.status,
        "stage": state.outcome.stage.value if state.outcome.stage else None,
        "reason": state.outcome.reason,
        "retries_used": dict(sorted(state.retries_used.items())),
        "debug_iterations": state.debug_iterations,
        "plan_actions": len(result.plan.actions) if result.plan else 0,
        "candidate_hash": result.candidate.content_hash if result.candidate else None,
        "last_verdict": state.last_verdict.model_dump(mode="json") if state.last_verdict else None,
    }


def run_pipeline(snapshot: CodebaseSnapshot, config: PipelineConfig, gateway: Gateway,
                 runner: CommandRunner | None = None, dry_run: bool = False) -> PipelineResult:
    """Run every stage on ``snapshot``; the result's outcome says how far it got."""
    return Pipeline(snapshot, config, gateway, runner, dry_run).run()
