"""Compiler, test-suite and profiler drivers plus their output parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from hsrefactor.errors import NoSources
from hsrefactor.toolchain.config import ToolConfig
from hsrefactor.toolchain.runner import CommandResult, CommandRunner, ToolError


class UnparseableOutput(ToolError):
    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class MissingHeaderLine(ToolError):
    def __init__(self, name: str):
        super().__init__(f"profile report has no '{name}' line")
        self.name = name


class BuildFailed(ToolError):
    def __init__(self, message: str, result: CompileResult | None = None):
        super().__init__(message)
        self.result = result


class ProfileFileMissing(ToolError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    file: str
    line: int
    message: str
    col: int = 0


@dataclass
class CompileResult:
    success: bool
    diagnostics: list[Diagnostic] = field(default_factory=list)
    elapsed_ms: int = 0
    output: str = ""

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


@dataclass
class TestResult:
    total: int = 0
    passed: int = 0
    failed: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)
    skipped: bool = False
    exit_code: int = 0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.total != self.passed + self.failed:
            raise ValueError("total must equal passed + failed")
        if self.failed != len(self.failures):
            raise ValueError("failed must equal the number of recorded failures")

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.exit_code == 0


@dataclass(frozen=True)
class ProfileStats:
    total_time_secs: Decimal
    ticks: int
    tick_interval_us: int
    total_alloc_bytes: int
    processors: int = 1

    def __post_init__(self):
        if min(self.total_time_secs, self.ticks, self.tick_interval_us, self.total_alloc_bytes) < 0:
            raise ValueError("profile figures must be non-negative")

    def is_consistent(self, printed_decimals: int = 2) -> bool:
        """Ticks x interval agrees with the printed seconds.

        Allows one tick plus half a unit of the printed precision, since the
        report rounds the seconds figure.
        """
        measured = self.ticks * self.tick_interval_us
        printed = self.total_time_secs * 1_000_000
        slack = self.tick_interval_us + Decimal(5) * Decimal(10) ** (5 - printed_decimals)
        return abs(measured - printed) <= slack

    def to_dict(self) -> dict:
        return {
            "total_time_secs": str(self.total_time_secs),
            "ticks": self.ticks,
            "tick_interval_us": self.tick_interval_us,
            "total_alloc_bytes": self.total_alloc_bytes,
            "processors": self.processors,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ProfileStats:
        return cls(
            Decimal(data["total_time_secs"]),
            int(data["ticks"]),
            int(data["tick_interval_us"]),
            int(data["total_alloc_bytes"]),
            int(data.get("processors", 1)),
        )


# diagnostics

_DIAG = re.compile(
    r"^(?P<file>[^\s:][^:\n]*):"
    r"(?:(?P<line>\d+):(?P<col>\d+)(?:-\d+)?|\((?P<rline>\d+),(?P<rcol>\d+)\)-\(\d+,\d+\)):"
    r"\s*(?P<sev>error|warning)(?:\s*\[[^\]\n]*\])?:?\s*(?P<msg>.*)$",
    re.IGNORECASE,
)


def parse_diagnostics(text: str) -> list[Diagnostic]:
    """GHC ``file:line:col: error|warning:`` messages with their indented continuation."""
    out: list[Diagnostic] = []
    current: dict | None = None
    extra: list[str] = []

    def flush():
        if current is not None:
            msg = " ".join([current["msg"], *extra]).strip()
            out.append(Diagnostic(current["sev"], current["file"], current["line"], msg, current["col"]))

    for raw in text.splitlines():
        m = _DIAG.match(raw)
        if m:
            flush()
            current = {
                "sev": m["sev"].lower(),
                "file": m["file"],
                "line": int(m["line"] or m["rline"]),
                "col": int(m["col"] or m["rcol"]),
                "msg": m["msg"].strip(),
            }
            extra = []
        elif current is not None and raw.startswith((" ", "\t")) and raw.strip() and "|" not in raw:
            extra.append(raw.strip())
        elif current is not None and not raw.strip():
            flush()
            current = None
    flush()
    return out


def write_log(log_dir: Path | None, tool: str, program: str, args: list[str], result: CommandResult) -> None:
    if log_dir is None:
        return
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    text = (
        f"$ {program} {' '.join(args)}\n"
        f"exit: {result.exit_code}\n"
        f"--- stdout ---\n{result.stdout}\n"
        f"--- stderr ---\n{result.stderr}\n"
    )
    (log_dir / f"{tool}.log").write_text(text, encoding="utf-8")


def haskell_files(project_dir: Path) -> list[str]:
    root = Path(project_dir)
    files = sorted(p.relative_to(root).as_posix() for p in root.rglob("*.hs") if not p.name.startswith("."))
    if not files:
        raise NoSources(f"no .hs files under {root}")
    return files


def _main_sources(project_dir: Path) -> list[str]:
    files = haskell_files(project_dir)
    mains = [f for f in files if Path(f).name == "Main.hs"]
    return mains[:1] or files


def run_compile(project_dir: Path, runner: CommandRunner, config: ToolConfig | None = None,
                log_dir: Path | None = None) -> CompileResult:
    config = config or ToolConfig()
    args = [*config.compile_flags, *_main_sources(project_dir)]
    result = runner.run(config.compiler, args, Path(project_dir), config.compile_timeout)
    write_log(log_dir, "compile", config.compiler, args, result)
    output = result.stdout + ("\n" if result.stdout and result.stderr else "") + result.stderr
    diags = parse_diagnostics(output)
    success = result.exit_code == 0 and not any(d.severity == "error" for d in diags)
    return CompileResult(success, diags, result.elapsed_ms, output)


_FAILURE_ITEM = re.compile(r"^\s*(\d+)\)\s+(.+?)\s*$")


def parse_test_output(text: str, regex: str, exit_code: int = 0) -> TestResult:
    matches = list(re.finditer(regex, text))
    if not matches:
        raise UnparseableOutput("test output has no summary line", text)
    total, failed = int(matches[-1].group(1)), int(matches[-1].group(2))
    if failed > total:
        raise UnparseableOutput("more failures than tests", text)
    if exit_code == 0 and failed:
        raise UnparseableOutput("test command succeeded but reported failures", text)
    names: list[tuple[str, str]] = []
    lines = text.splitlines()
    for i, line in enumerate(lines):
        m = _FAILURE_ITEM.match(line)
        if m and len(names) < failed:
            detail = lines[i + 1].strip() if i + 1 < len(lines) else ""
            names.append((m.group(2), detail))
    while len(names) < failed:
        names.append((f"failure {len(names) + 1}", ""))
    return TestResult(total, total - failed, failed, names, exit_code=exit_code)


def run_tests(project_dir: Path, runner: CommandRunner, config: ToolConfig | None = None,
              log_dir: Path | None = None) -> TestResult:
    config = config or ToolConfig()
    if not config.test_command:
        return TestResult(skipped=True)
    program, *args = config.test_command
    result = runner.run(program, args, Path(project_dir), config.test_timeout)
    write_log(log_dir, "test", program, args, result)
    return parse_test_output(result.stdout + "\n" + result.stderr, config.test_regex, result.exit_code)


_TIME = re.compile(
    r"total time\s*=\s*(?P<secs>\d+(?:\.\d+)?)\s*secs?\s*"
    r"\(\s*(?P<ticks>[\d,]+)\s*ticks?\s*@\s*(?P<interval>[\d,]+)\s*us"
    r"(?:,\s*(?P<procs>\d+)\s*processors?)?\s*\)"
)
_ALLOC = re.compile(r"total alloc\s*=\s*(?P<bytes>[\d,]+)\s*bytes")


def _int(text: str) -> int:
    return int(text.replace(",", ""))


def parse_prof(prof_text: str) -> ProfileStats:
    """Read the ``total time`` and ``total alloc`` header lines of a ``.prof`` report."""
    t = _TIME.search(prof_text)
    if t is None:
        raise MissingHeaderLine("total time")
    a = _ALLOC.search(prof_text)
    if a is None:
        raise MissingHeaderLine("total alloc")
    return ProfileStats(
        Decimal(t["secs"]),
        _int(t["ticks"]),
        _int(t["interval"]),
        _int(a["bytes"]),
        int(t["procs"] or 1),
    )


def render_prof(stats: ProfileStats, program: str = "main") -> str:
    """Canonical ``.prof`` header for ``stats`` (no cost-centre table)."""
    procs = "processor" if stats.processors == 1 else "processors"
    return (
        f"\t{program} +RTS -p -RTS\n\n"
        f"\ttotal time  =        {stats.total_time_secs:.2f} secs   "
        f"({stats.ticks} ticks @ {stats.tick_interval_us} us, {stats.processors} {procs})\n"
        f"\ttotal alloc = {stats.total_alloc_bytes:,} bytes  (excludes profiling overheads)\n"
    )


def run_profile(project_dir: Path, runner: CommandRunner, config: ToolConfig | None = None,
                log_dir: Path | None = None) -> ProfileStats:
    """Build with profiling, run the binary with RTS profiling, parse the report."""
    config = config or ToolConfig()
    project_dir = Path(project_dir)
    exe = config.profile_exe
    build_args = [*config.profile_flags, "-rtsopts", "-outputdir", ".prof-build", "-o", exe,
                  *_main_sources(project_dir)]
    built = runner.run(config.compiler, build_args, project_dir, config.compile_timeout)
    write_log(log_dir, "profile-build", config.compiler, build_args, built)
    if built.exit_code != 0:
        output = built.stdout + "\n" + built.stderr
        raise BuildFailed("profiling build failed", CompileResult(False, parse_diagnostics(output), 0, output))
    program = f"./{exe}"
    ran = runner.run(program, list(config.run_flags), project_dir, config.profile_timeout)
    write_log(log_dir, "profile-run", program, list(config.run_flags), ran)
    report = project_dir / f"{exe}.prof"
    if not report.exists():
        found = sorted(project_dir.glob("*.prof"))
        if not found:
            raise ProfileFileMissing(f"{report.name} was not produced")
        report = found[0]
    return parse_prof(report.read_text(encoding="utf-8"))
