"""Pluggable command execution: real subprocesses or replayed fixtures."""

from __future__ import annotations

import json
import logging
import os
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from hsrefactor.errors import HsRefactorError

log = logging.getLogger(__name__)


class ToolError(HsRefactorError):
    pass


class ToolNotFound(ToolError):
    pass


class Timeout(ToolError):
    pass


class ReplayMiss(ToolError):
    """No recorded entry matches the request."""


@dataclass(frozen=True)
class CommandResult:
    exit_code: int
    stdout: str = ""
    stderr: str = ""
    elapsed_ms: int = 0


class CommandRunner(Protocol):
    def run(self, program: str, args: list[str], workdir: Path, timeout: float) -> CommandResult: ...


class SubprocessRunner:
    def __init__(self, env: dict[str, str] | None = None):
        self.env = env

    def run(self, program: str, args: list[str], workdir: Path, timeout: float) -> CommandResult:
        exe = program
        if os.sep not in program and not program.startswith("."):
            exe = shutil.which(program)
            if exe is None:
                raise ToolNotFound(f"{program} is not on PATH")
        elif not (Path(workdir) / program).exists() and not Path(program).exists():
            raise ToolNotFound(f"{program} does not exist")
        start = time.monotonic()
        try:
            proc = subprocess.run(
                [exe, *args],
                cwd=workdir,
                capture_output=True,
                text=True,
                timeout=timeout,
                env=self.env,
                check=False,
            )
        except subprocess.TimeoutExpired as exc:
            raise Timeout(f"{program} exceeded {timeout:g}s") from exc
        except FileNotFoundError as exc:
            raise ToolNotFound(str(exc)) from exc
        elapsed = int((time.monotonic() - start) * 1000)
        return CommandResult(proc.returncode, proc.stdout, proc.stderr, elapsed)


def project_sources(workdir: Path) -> str:
    parts = []
    for path in sorted(Path(workdir).rglob("*.hs")):
        parts.append(path.read_text(encoding="utf-8", errors="replace"))
    return "\n".join(parts)


@dataclass
class ReplayEntry:
    program: str
    exit_code: int = 0
    stdout: str = ""
    stderr: str = ""
    args: list[str] | None = None
    args_contain: list[str] = field(default_factory=list)
    when_source_contains: list[str] = field(default_factory=list)
    unless_source_contains: list[str] = field(default_factory=list)
    files: dict[str, str] = field(default_factory=dict)
    timeout: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> ReplayEntry:
        data = dict(data)
        for key in ("when_source_contains", "unless_source_contains"):
            if isinstance(data.get(key), str):
                data[key] = [data[key]]
        data.pop("comment", None)
        return cls(**data)

    def matches(self, program: str, args: list[str], workdir: Path) -> bool:
        if self.program != program:
            return False
        if self.args is not None and self.args != list(args):
            return False
        if any(a not in args for a in self.args_contain):
            return False
        if self.when_source_contains or self.unless_source_contains:
            source = project_sources(workdir)
            if not all(s in source for s in self.when_source_contains):
                return False
            if any(s in source for s in self.unless_source_contains):
                return False
        return True


class ReplayRunner:
    """Answers commands from recorded entries; the first matching entry wins.

    Never starts a process. Entries may also drop files (such as a ``.prof``
    report) into the working directory to stand in for tool side effects.
    """

    def __init__(self, entries: list[ReplayEntry]):
        self.entries = list(entries)
        self.calls: list[tuple[str, tuple[str, ...]]] = []

    @classmethod
    def from_file(cls, path: str | Path) -> ReplayRunner:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = data["entries"] if isinstance(data, dict) else data
        return cls([ReplayEntry.from_dict(e) for e in entries])

    def run(self, program: str, args: list[str], workdir: Path, timeout: float) -> CommandResult:
        self.calls.append((program, tuple(args)))
        for entry in self.entries:
            if entry.matches(program, args, workdir):
                if entry.timeout:
                    raise Timeout(f"{program} exceeded {timeout:g}s (replayed)")
                for rel, content in entry.files.items():
                    target = Path(workdir) / rel
                    target.parent.mkdir(parents=True, exist_ok=True)
                    target.write_text(content, encoding="utf-8")
                return CommandResult(entry.exit_code, entry.stdout, entry.stderr, 0)
        raise ReplayMiss(f"no replay entry for {program} {' '.join(args)}")


class RecordingRunner:
    """Wraps another runner and keeps replayable entries for every call."""

    def __init__(self, inner: CommandRunner):
        self.inner = inner
        self.entries: list[dict] = []

    def run(self, program: str, args: list[str], workdir: Path, timeout: float) -> CommandResult:
        result = self.inner.run(program, args, workdir, timeout)
        self.entries.append({
            "program": program,
            "args": list(args),
            "exit_code": result.exit_code,
            "stdout": result.stdout,
            "stderr": result.stderr,
        })
        return result

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({"entries": self.entries}, indent=2) + "\n", encoding="utf-8")
