"""External Haskell tooling behind a replaceable command runner."""

from hsrefactor.toolchain.config import ToolConfig
from hsrefactor.toolchain.ghc import (
    BuildFailed,
    CompileResult,
    Diagnostic,
    MissingHeaderLine,
    ProfileFileMissing,
    ProfileStats,
    TestResult,
    UnparseableOutput,
    haskell_files,
    parse_diagnostics,
    parse_prof,
    parse_test_output,
    render_prof,
    run_compile,
    run_profile,
    run_tests,
)
from hsrefactor.toolchain.hlint import Hint, HlintReport, SummaryMismatch, parse_hlint, run_hlint
from hsrefactor.toolchain.runner import (
    CommandResult,
    CommandRunner,
    RecordingRunner,
    ReplayEntry,
    ReplayMiss,
    ReplayRunner,
    SubprocessRunner,
    Timeout,
    ToolError,
    ToolNotFound,
)

__all__ = [
    "BuildFailed", "CommandResult", "CommandRunner", "CompileResult", "Diagnostic", "Hint",
    "HlintReport", "MissingHeaderLine", "ProfileFileMissing", "ProfileStats", "RecordingRunner",
    "ReplayEntry", "ReplayMiss", "ReplayRunner", "SubprocessRunner", "SummaryMismatch",
    "TestResult", "Timeout", "ToolConfig", "ToolError", "ToolNotFound", "UnparseableOutput",
    "haskell_files", "parse_diagnostics", "parse_hlint", "parse_prof", "parse_test_output",
    "render_prof", "run_compile", "run_hlint", "run_profile", "run_tests",
]
