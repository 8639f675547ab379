"""The multi-agent refactoring pipeline."""

from hsrefactor.pipeline.config import PipelineConfig
from hsrefactor.pipeline.facts import CodeFacts, FunctionInfo, build_facts
from hsrefactor.pipeline.orchestrator import (
    Aborted,
    ArtifactWriter,
    Pipeline,
    PipelineResult,
    PipelineState,
    compute_run_id,
    report_metadata,
    run_pipeline,
)
from hsrefactor.pipeline.stages import (
    CandidateError,
    Exchange,
    ScopeViolation,
    StageResult,
    UnparseableCandidate,
    analysis_stage,
    apply_changes,
    check_analysis,
    check_context,
    check_strategy,
    context_stage,
    debug_stage,
    diff_summary,
    opinion,
    refactor_stage,
    refactor_stage1,
    refactor_stage2,
    strategy_stage,
    test_and_validate,
    verify_analysis,
    verify_context,
    verify_strategy,
)

__all__ = [
    "Aborted", "ArtifactWriter", "CandidateError", "CodeFacts", "Exchange", "FunctionInfo", "Pipeline",
    "PipelineConfig", "PipelineResult", "PipelineState", "ScopeViolation", "StageResult",
    "UnparseableCandidate", "analysis_stage", "apply_changes", "build_facts", "check_analysis",
    "check_context", "check_strategy", "compute_run_id", "context_stage", "debug_stage", "diff_summary",
    "opinion", "refactor_stage", "refactor_stage1", "refactor_stage2", "report_metadata", "run_pipeline", "strategy_stage",
    "test_and_validate", "verify_analysis", "verify_context", "verify_strategy",
]
