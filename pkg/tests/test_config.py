from __future__ import annotations

from pathlib import Path

import pytest

from hsrefactor.config import AppConfig, ConfigError, load_config, parse_config
from hsrefactor.metrics import SizeClass


def test_defaults() -> None:
    cfg = AppConfig()
    assert cfg.pipeline.max_retries == 3
    assert cfg.pipeline.max_debug_loops == 3
    assert cfg.pipeline.cc_hotspot_threshold == 5
    assert cfg.pipeline.tools.test_command is None
    assert load_config(None) == cfg


def test_sections_are_applied(tmp_path: Path) -> None:
    path = tmp_path / "hs.toml"
    path.write_text(
        "[pipeline]\nmax_retries = 1\nverifier_opinions = false\n"
        "[tools]\ntest_command = [\"cabal\", \"test\"]\ncompile_timeout = 10\n"
        "[llm]\nmodel = \"m\"\n"
        "[selection]\nsize_class = \"Small\"\nmin_features = 2\n"
        "[paths]\nartifacts = \"out\"\n"
    )
    cfg = load_config(path)
    assert cfg.pipeline.max_retries == 1 and not cfg.pipeline.verifier_opinions
    assert cfg.pipeline.tools.test_command == ["cabal", "test"]
    assert cfg.pipeline.tools.compile_timeout == 10.0
    assert cfg.llm.model == "m"
    assert cfg.selection.size_class is SizeClass.SMALL and cfg.selection.min_features == 2
    assert cfg.pipeline.artifact_dir == tmp_path / "out"


@pytest.mark.parametrize("data, message", [
    ({"pipeline": {"max_retry": 2}}, "unknown key 'max_retry' in [pipeline]"),
    ({"extras": {}}, "unknown section [extras]"),
    ({"llm": {"api_key": "sk-123"}}, "credentials are read from the environment"),
    ({"pipeline": {"max_retries": "3"}}, "max_retries must be of type int"),
    ({"pipeline": {"max_retries": True}}, "must be an integer"),
    ({"pipeline": {"max_retries": 0}}, "max_retries must be at least 1"),
    ({"tools": {"test_command": "cabal test"}}, "test_command must be a list of strings"),
    ({"selection": {"size_class": "Huge"}}, "size_class"),
])
def test_rejects_bad_config(data: dict, message: str) -> None:
    with pytest.raises(ConfigError, match=message.replace("[", r"\[").replace("]", r"\]")):
        parse_config(data)


def test_unreadable_and_malformed(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[pipeline\n")
    with pytest.raises(ConfigError):
        load_config(bad)
