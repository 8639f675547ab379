from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

import scenario
from hsrefactor.cli import main
from hsrefactor.llm import HttpBackend, Transcript

REPLAY = ["--config", str(scenario.CONFIG), "refactor", str(scenario.CODEBASE),
          "--replay", str(scenario.TRANSCRIPT), "--tool-replay", str(scenario.TOOLS)]


def out_dirs(tmp_path: Path, name: str) -> list[str]:
    return ["--artifacts", str(tmp_path / name / "artifacts"), "--store", str(tmp_path / name / "store")]


def test_analyze_text_and_json(capsys) -> None:
    assert main(["analyze", str(scenario.CODEBASE)]) == 0
    text = capsys.readouterr().out
    assert "cyclomatic complexity: 22" in text and "Inventory.restockLevel: 5" in text
    assert main(["analyze", str(scenario.CODEBASE), "--json", "--tool-replay", str(scenario.TOOLS)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["cc"]["total"] == 22 and data["loc"] == 50 and data["size_class"] == "BelowRange"
    assert data["hlint_hints"] == 2 and data["profile"]["ticks"] == 4


def test_missing_sources_exit_2(tmp_path: Path, capsys) -> None:
    assert main(["analyze", str(tmp_path)]) == 2
    assert main(["analyze", str(tmp_path / "absent")]) == 2
    assert "no .hs files" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path: Path, capsys) -> None:
    cfg = tmp_path / "c.toml"
    cfg.write_text("[pipeline]\nretries = 1\n")
    assert main(["--config", str(cfg), "analyze", str(scenario.CODEBASE)]) == 2
    assert "unknown key 'retries'" in capsys.readouterr().err


def test_select(tmp_path: Path, capsys) -> None:
    assert main(["select", str(scenario.CODEBASE), "--json"]) == 3
    data = json.loads(capsys.readouterr().out)
    assert not data["accepted"] and any("BelowRange" in r for r in data["reasons"])
    shutil.copy(scenario.FIXTURES / "loc120.hs", tmp_path / "Main.hs")
    cfg = tmp_path / "c.toml"
    cfg.write_text("[selection]\nmin_features = 0\n")
    assert main(["--config", str(cfg), "select", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("selected")
    assert "search filter: language:Haskell stars:>50 size:<2000" in out


def test_refactor_replay_is_offline_and_deterministic(tmp_path: Path, capsys, monkeypatch, no_network) -> None:
    def live(*args, **kwargs):
        raise AssertionError("live backend used in replay mode")

    monkeypatch.setattr(HttpBackend, "complete", live)
    assert main([*REPLAY, *out_dirs(tmp_path, "one"), "--json"]) == 0
    first = json.loads(capsys.readouterr().out)
    assert main([*REPLAY, *out_dirs(tmp_path, "two"), "--json"]) == 0
    second = json.loads(capsys.readouterr().out)
    assert first == second
    run_id = first["metadata"]["run_id"]
    one, two = (tmp_path / n / "artifacts" / run_id for n in ("one", "two"))
    assert (one / "report.json").read_bytes() == (two / "report.json").read_bytes()
    for path in sorted((one / "output").rglob("*.hs")):
        assert path.read_bytes() == (two / "output" / path.relative_to(one / "output")).read_bytes()
    assert first["metadata"]["retries_used"] == {"Context": 1}
    assert first["metadata"]["debug_iterations"] == 1


def test_report_command(tmp_path: Path, capsys, no_network) -> None:
    assert main([*REPLAY, *out_dirs(tmp_path, "r"), "--json"]) == 0
    run_id = json.loads(capsys.readouterr().out)["metadata"]["run_id"]
    store = str(tmp_path / "r" / "store")
    assert main(["report", run_id, "--store", store]) == 0
    text = capsys.readouterr().out
    assert "| Cyclomatic Complexity (CC) | 22 | 19 | 13.64% | Improved |" in text
    assert main(["report", run_id, "--store", store, "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["table"]["snapshot_id"]
    assert main(["report", run_id, "--store", store, "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["metadata"] == {"run_id": run_id}
    assert main(["report", "000000000000", "--store", store]) == 3


def test_dry_run_writes_nothing(tmp_path: Path, capsys, no_network) -> None:
    assert main([*REPLAY, *out_dirs(tmp_path, "d"), "--dry-run", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [a["kind"] for a in data["metadata"]["plan"]["actions"]][0] == "DecomposeFunction"
    assert not (tmp_path / "d").exists()


def test_aborted_run_exit_4(tmp_path: Path, capsys, no_network) -> None:
    transcript = Transcript.load(scenario.TRANSCRIPT)
    for entry in transcript.entries:
        if entry.role == "Debug":
            entry.completion["raw_text"] = "I could not fix it."
    mutated = tmp_path / "t.jsonl"
    transcript.dump(mutated)
    args = [a if a != str(scenario.TRANSCRIPT) else str(mutated) for a in REPLAY]
    assert main([*args, *out_dirs(tmp_path, "m")]) == 4
    out = capsys.readouterr().out
    assert "outcome: Aborted" in out and "stage: Debug" in out


def test_live_mode_needs_model_and_key(tmp_path: Path, capsys, monkeypatch, no_network) -> None:
    assert main(["refactor", str(scenario.CODEBASE), *out_dirs(tmp_path, "x")]) == 2
    assert "no model configured" in capsys.readouterr().err
    cfg = tmp_path / "c.toml"
    cfg.write_text('[llm]\nmodel = "m"\n')
    monkeypatch.delenv("LLM_API_KEY", raising=False)
    code = main(["--config", str(cfg), "refactor", str(scenario.CODEBASE), "--tool-replay", str(scenario.TOOLS),
                 *out_dirs(tmp_path, "x")])
    assert code == 4
    assert "reason: BackendUnavailable" in capsys.readouterr().out


def test_help_lists_defaults(capsys) -> None:
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    assert "max_retries = 3" in out and "cc_hotspot_threshold = 5" in out and "LLM_API_KEY" in out
