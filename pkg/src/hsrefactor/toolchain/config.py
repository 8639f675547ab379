from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class ToolConfig:
    compiler: str = "ghc"
    compile_flags: list[str] = field(default_factory=lambda: ["--make", "-outputdir", ".build", "-o", ".build/main"])
    linter: str = "hlint"
    lint_args: list[str] = field(default_factory=lambda: ["."])
    test_command: list[str] | None = None
    test_regex: str = r"(\d+) examples?, (\d+) failures?"
    profile_flags: list[str] = field(default_factory=lambda: ["-prof", "-fprof-auto"])
    profile_exe: str = "prof-main"
    run_flags: list[str] = field(default_factory=lambda: ["+RTS", "-p", "-RTS"])
    compile_timeout: float = 300.0
    test_timeout: float = 300.0
    profile_timeout: float = 120.0
