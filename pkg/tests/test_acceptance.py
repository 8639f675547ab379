"""Acceptance criteria, one test each; every test prints a PASS or FAIL line."""

from __future__ import annotations

import json
import time
from decimal import Decimal
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

import scenario
from hsgen import functions
from hsrefactor.cli import main
from hsrefactor.llm import Transcript
from hsrefactor.metrics import build_cfg, cyclomatic_complexity, decision_point_cc, function_complexity
from hsrefactor.reporting import percent_reduction
from hsrefactor.syntax import parse_module
from hsrefactor.toolchain import SummaryMismatch, parse_hlint, parse_prof
from hsrefactor.artifacts import AgentRole

FIXTURES = scenario.FIXTURES


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            print(f"\nAC{number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, detail

    return emit


def test_ac1_percent_reduction(verdict) -> None:
    cases = [
        ((22, 19), "13.64"), ((17, 9), "47.06"),
        ((4, 2), "50.00"), ((13, 12), "7.69"),
        ((300_496, 287_952), "4.17"), ((2_059_288, 1_200_040), "41.73"),
    ]
    start = time.perf_counter()
    got = [percent_reduction(pre, post) for (pre, post), _ in cases]
    elapsed = time.perf_counter() - start
    ok = all(abs(g - Decimal(want)) <= Decimal("0.01") for g, (_, want) in zip(got, cases)) and elapsed < 1
    verdict(1, "percent_reduction reproduces the six comparison values", ok,
            f"{', '.join(str(g) for g in got)} in {elapsed * 1000:.1f} ms")


def test_ac2_profile_parsing(verdict) -> None:
    expected = {
        "a_pre": (Decimal("0.01"), 4, 1000, 300_496),
        "a_post": (Decimal("0.01"), 2, 1000, 287_952),
        "b_pre": (Decimal("0.01"), 13, 1000, 2_059_288),
        "b_post": (Decimal("0.01"), 12, 1000, 1_200_040),
    }
    got = {}
    for name in expected:
        s = parse_prof((FIXTURES / "prof" / f"{name}.prof").read_text(encoding="utf-8"))
        got[name] = (s.total_time_secs, s.ticks, s.tick_interval_us, s.total_alloc_bytes)
    mismatches = [n for n in expected if got[n] != expected[n]]
    verdict(2, "parse_prof is exact on the four profile fixtures", not mismatches,
            f"mismatches: {mismatches}" if mismatches else "4/4 exact")


def test_ac3_cfg_matches_decision_points(verdict) -> None:
    seen = []
    mismatches = []

    @settings(max_examples=1500, deadline=None, derandomize=True, database=None,
              suppress_health_check=list(HealthCheck))
    @given(functions())
    def check(case) -> None:
        source, _ = case
        fn = parse_module(source).functions()[0]
        seen.append(source)
        cfg = build_cfg(fn)
        if cyclomatic_complexity(cfg) != decision_point_cc(fn):
            mismatches.append(source)

    start = time.perf_counter()
    check()
    elapsed = time.perf_counter() - start
    distinct = len(set(seen))
    ok = distinct >= 1000 and not mismatches and elapsed < 60
    verdict(3, "CFG complexity equals decision-point count on random functions", ok,
            f"{distinct} distinct functions, {len(mismatches)} mismatches, {elapsed:.1f} s")


def test_ac4_hand_fixtures(verdict) -> None:
    expected = json.loads((FIXTURES / "cc" / "expected.json").read_text(encoding="utf-8"))
    checked = wrong = 0
    for file, per_fn in expected.items():
        module = parse_module((FIXTURES / "cc" / file).read_text(encoding="utf-8"), file)
        by_name = {fn.name: fn for fn in module.functions()}
        for name, cc in per_fn.items():
            checked += 1
            wrong += function_complexity(by_name[name]) != cc
    pre = parse_module((FIXTURES / "point_free" / "pre.hs").read_text(encoding="utf-8")).functions()
    pair = []
    for post_file in ("post_verbatim.hs", "post_squared.hs"):
        post = parse_module((FIXTURES / "point_free" / post_file).read_text(encoding="utf-8")).functions()
        pair.append((function_complexity(pre[0]), function_complexity(post[0])))
    pair_ok = all(p == (1, 1) and p[1] <= p[0] for p in pair)
    ok = checked >= 15 and wrong == 0 and pair_ok
    verdict(4, "hand-derived CC fixtures and the point-free pair", ok,
            f"{checked - wrong}/{checked} fixtures, point-free pair pre/post CC {pair}")


def _replay(transcript: Path, out: Path, capsys) -> tuple[int, dict]:
    code = main(["--config", str(scenario.CONFIG), "refactor", str(scenario.CODEBASE),
                 "--replay", str(transcript), "--tool-replay", str(scenario.TOOLS),
                 "--artifacts", str(out / "artifacts"), "--store", str(out / "store"), "--json"])
    return code, json.loads(capsys.readouterr().out)["metadata"]


def test_ac5_end_to_end_replay(verdict, tmp_path: Path, capsys, no_network) -> None:
    start = time.perf_counter()
    code1, meta1 = _replay(scenario.TRANSCRIPT, tmp_path / "one", capsys)
    code2, meta2 = _replay(scenario.TRANSCRIPT, tmp_path / "two", capsys)
    elapsed = time.perf_counter() - start
    run_id = meta1["run_id"]
    reports = [(tmp_path / n / "artifacts" / run_id / "report.json").read_bytes() for n in ("one", "two")]
    ok = (
        code1 == code2 == 0
        and meta1["outcome"] == "Succeeded"
        and reports[0] == reports[1]
        and sum(meta1["retries_used"].values()) >= 1
        and meta1["debug_iterations"] >= 1
        and elapsed < 30
    )
    verdict(5, "replayed refactoring run is deterministic and offline", ok,
            f"{meta1['outcome']}, identical report.json: {reports[0] == reports[1]}, "
            f"retries {meta1['retries_used']}, debug loops {meta1['debug_iterations']}, {elapsed:.2f} s")


MUTATIONS = {
    "ghost function": (AgentRole.CONTEXT, AgentRole.CONTEXT_VERIFIER, scenario.context_answer("phantom"),
                       "UnknownFunction"),
    "inflated CC": (AgentRole.ANALYSIS, AgentRole.ANALYSIS_VERIFIER, scenario.analysis_answer(claimed_cc=9),
                    "CcMismatch"),
    "nonexistent target": (AgentRole.STRATEGY, AgentRole.STRATEGY_VERIFIER,
                           scenario.plan_answer(first_target="Inventory.nonexistent"), "UnknownTarget"),
}


def _verdict(out: Path, run_id: str, gate: AgentRole, attempt: int) -> dict:
    path = out / "artifacts" / run_id / f"{gate.index:02d}-{gate.value}" / f"attempt-{attempt}.verdict.json"
    return json.loads(path.read_text(encoding="utf-8"))


def _error_codes(v: dict) -> set[str]:
    return {f["code"] for f in v["findings"] if f["severity"] == "error"}


@pytest.mark.parametrize("mutation", sorted(MUTATIONS))
def test_ac6_gate_soundness(mutation: str, verdict, tmp_path: Path, capsys, no_network) -> None:
    producer, gate, answer, code = MUTATIONS[mutation]

    # one recorded answer replaced: the gate rejects it
    transcript = Transcript.load(scenario.TRANSCRIPT)
    target = [e for e in transcript.entries if e.role == producer.value][-1]
    attempt = sum(1 for e in transcript.entries if e.role == producer.value)
    target.completion["raw_text"] = answer
    single = tmp_path / "single.jsonl"
    transcript.dump(single)
    _, meta = _replay(single, tmp_path / "single", capsys)
    first = _verdict(tmp_path / "single", meta["run_id"], gate, attempt)
    rejected = first["decision"] == "Reject" and code in _error_codes(first)

    # every answer mutated: the retry budget runs out at the same gate
    with_budget = tmp_path / "budget.jsonl"
    scenario.record(scenario.repeat(scenario.base_script(), producer, answer), tmp_path / "rec").dump(with_budget)
    exit_code, meta = _replay(with_budget, tmp_path / "budget", capsys)
    attempts = [_verdict(tmp_path / "budget", meta["run_id"], gate, k) for k in (1, 2, 3, 4)]
    exhausted = (
        exit_code == 4
        and meta["outcome"] == "Aborted"
        and meta["stage"] == gate.value
        and meta["reason"] == "RetryBudgetExhausted"
        and all(v["decision"] == "Reject" and code in _error_codes(v) for v in attempts)
    )
    verdict(6, f"{mutation} is rejected by {gate.value}", rejected and exhausted,
            f"first verdict {first['decision']} {sorted(_error_codes(first))}; "
            f"budget run {meta['outcome']} at {meta['stage']} ({meta['reason']})")


def test_ac7_hlint_summaries(verdict) -> None:
    files = {"two_hints": 2, "three_hints": 3, "one_hint": 1, "no_hints": 0}
    got = {name: parse_hlint((FIXTURES / "hlint" / f"{name}.txt").read_text(encoding="utf-8")).hint_count
           for name in files}
    try:
        parse_hlint((FIXTURES / "hlint" / "mismatch.txt").read_text(encoding="utf-8"))
        raised = False
    except SummaryMismatch:
        raised = True
    verdict(7, "hlint summaries parse and inconsistent output is refused", got == files and raised,
            f"{got}, mismatch raised: {raised}")
