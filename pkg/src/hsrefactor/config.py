"""TOML configuration with strict key checking."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from hsrefactor.corpus import SelectionCriteria
from hsrefactor.errors import HsRefactorError
from hsrefactor.metrics import SizeClass
from hsrefactor.pipeline import PipelineConfig
from hsrefactor.toolchain import ToolConfig


class ConfigError(HsRefactorError):
    pass


@dataclass(frozen=True)
class LlmConfig:
    base_url: str = "http://localhost:8000/v1"
    model: str = ""
    timeout: float = 120.0
    max_re_asks: int = 2

    def __post_init__(self):
        if self.max_re_asks < 0:
            raise ValueError("max_re_asks must be non-negative")


@dataclass(frozen=True)
class AppConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    selection: SelectionCriteria = field(default_factory=SelectionCriteria)


PIPELINE_KEYS = {f.name for f in dataclasses.fields(PipelineConfig)} - {"tools", "artifact_dir", "store_dir"}
PATH_KEYS = {"artifacts": "artifact_dir", "store": "store_dir"}
SECRET_KEYS = {"api_key", "key", "token", "secret", "password"}


def _check(section: str, table: dict, allowed: set[str]) -> None:
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    for key in table:
        if key in SECRET_KEYS:
            raise ConfigError(f"[{section}] {key}: credentials are read from the environment, not from config files")
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in [{section}]")


def _typed(section: str, cls, values: dict) -> dict:
    """Check each value against the type of the field's default."""
    defaults = cls()
    out = {}
    for key, value in values.items():
        default = getattr(defaults, key)
        expected = type(default) if default is not None else None
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        elif expected is int and isinstance(value, bool):
            raise ConfigError(f"[{section}] {key} must be an integer")
        if expected is not None and expected is not Path and not isinstance(value, expected):
            raise ConfigError(f"[{section}] {key} must be of type {expected.__name__}")
        if isinstance(value, list) and not all(isinstance(v, str) for v in value):
            raise ConfigError(f"[{section}] {key} must be a list of strings")
        out[key] = value
    return out


def parse_config(data: dict, base_dir: Path | None = None) -> AppConfig:
    sections = {"pipeline", "tools", "llm", "selection", "paths"}
    for name in data:
        if name not in sections:
            raise ConfigError(f"unknown section [{name}]")
    pipeline = dict(data.get("pipeline", {}))
    tools = dict(data.get("tools", {}))
    llm = dict(data.get("llm", {}))
    selection = dict(data.get("selection", {}))
    paths = dict(data.get("paths", {}))
    _check("pipeline", pipeline, PIPELINE_KEYS)
    _check("tools", tools, {f.name for f in dataclasses.fields(ToolConfig)})
    _check("llm", llm, {f.name for f in dataclasses.fields(LlmConfig)})
    _check("selection", selection, {f.name for f in dataclasses.fields(SelectionCriteria)})
    _check("paths", paths, set(PATH_KEYS))
    if "test_command" in tools and not (isinstance(tools["test_command"], list)
                                        and all(isinstance(a, str) for a in tools["test_command"])):
        raise ConfigError("[tools] test_command must be a list of strings")
    test_command = tools.pop("test_command", None)
    if "size_class" in selection:
        try:
            selection["size_class"] = SizeClass(selection["size_class"])
        except ValueError as exc:
            raise ConfigError(f"[selection] size_class: {exc}") from exc
    size_class = selection.pop("size_class", None)
    pipeline_kw = _typed("pipeline", PipelineConfig, pipeline)
    for key, value in paths.items():
        if not isinstance(value, str):
            raise ConfigError(f"[paths] {key} must be a string")
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        pipeline_kw[PATH_KEYS[key]] = path
    try:
        tool_config = ToolConfig(**_typed("tools", ToolConfig, tools), test_command=test_command)
        return AppConfig(
            pipeline=PipelineConfig(tools=tool_config, **pipeline_kw),
            llm=LlmConfig(**_typed("llm", LlmConfig, llm)),
            selection=SelectionCriteria(**_typed("selection", SelectionCriteria, selection), size_class=size_class),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def defaults_table() -> str:
    """``[section] key = default`` lines for every configurable setting."""
    cfg = AppConfig()
    sections = {
        "pipeline": {k: getattr(cfg.pipeline, k) for k in sorted(PIPELINE_KEYS)},
        "tools": dataclasses.asdict(cfg.pipeline.tools),
        "llm": dataclasses.asdict(cfg.llm),
        "selection": {f.name: getattr(cfg.selection, f.name) for f in dataclasses.fields(SelectionCriteria)},
        "paths": {"artifacts": str(cfg.pipeline.artifact_dir), "store": str(cfg.pipeline.store_dir)},
    }
    lines = []
    for name, values in sections.items():
        lines.append(f"  [{name}]")
        lines += [f"    {key} = {value!r}" for key, value in values.items()]
    return "\n".join(lines)


def load_config(path: str | Path | None = None) -> AppConfig:
    """Read a TOML file; relative ``[paths]`` resolve against the file's directory."""
    if path is None:
        return AppConfig()
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, path.parent)


__all__ = ["AppConfig", "ConfigError", "LlmConfig", "defaults_table", "load_config", "parse_config"]
