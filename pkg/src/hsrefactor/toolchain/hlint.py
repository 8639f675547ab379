"""HLint text output parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from hsrefactor.toolchain.config import ToolConfig
from hsrefactor.toolchain.ghc import UnparseableOutput, write_log
from hsrefactor.toolchain.runner import CommandRunner, ToolError


class SummaryMismatch(ToolError):
    def __init__(self, summary: int, blocks: int):
        super().__init__(f"summary reports {summary} hints but {blocks} were listed")
        self.summary = summary
        self.blocks = blocks


@dataclass(frozen=True)
class Hint:
    severity: str
    file: str
    line: int
    suggestion: str


@dataclass
class HlintReport:
    hint_count: int = 0
    hints: list[Hint] = field(default_factory=list)

    def __post_init__(self):
        if self.hint_count != len(self.hints):
            raise SummaryMismatch(self.hint_count, len(self.hints))


_HINT = re.compile(
    r"^(?P<file>[^\s:][^:\n]*):"
    r"(?:(?P<line>\d+):\d+(?:-\d+)?|\((?P<rline>\d+),\d+\)-\(\d+,\d+\)):\s*"
    r"(?P<sev>Suggestion|Warning|Error|Ignore):\s*(?P<text>.*)$"
)
_SUMMARY = re.compile(r"^\s*(?:(?P<n>\d+) hints?(?:\(s\))?|(?P<none>No hints))\s*$")


def parse_hlint(text: str) -> HlintReport:
    """Parse hint blocks and the trailing ``N hints`` / ``No hints`` line.

    The count comes from the summary and must agree with the blocks found.
    """
    hints = []
    summary = None
    for raw in text.splitlines():
        m = _HINT.match(raw)
        if m:
            hints.append(Hint(m["sev"], m["file"], int(m["line"] or m["rline"]), m["text"].strip()))
            continue
        s = _SUMMARY.match(raw)
        if s:
            summary = 0 if s["none"] else int(s["n"])
    if summary is None:
        raise UnparseableOutput("hlint output has no summary line", text)
    if summary != len(hints):
        raise SummaryMismatch(summary, len(hints))
    return HlintReport(summary, hints)


def run_hlint(project_dir: Path, runner: CommandRunner, config: ToolConfig | None = None,
              log_dir: Path | None = None) -> HlintReport:
    config = config or ToolConfig()
    args = list(config.lint_args)
    result = runner.run(config.linter, args, Path(project_dir), config.compile_timeout)
    write_log(log_dir, "hlint", config.linter, args, result)
    return parse_hlint(result.stdout + "\n" + result.stderr)
