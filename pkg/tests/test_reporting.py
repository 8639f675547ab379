from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hsrefactor.corpus import MetricsRecord, Phase
from hsrefactor.reporting import (
    CC_LABEL,
    HLINT_LABEL,
    MEMORY_LABEL,
    RUNTIME_LABEL,
    Direction,
    DivisionByZeroPre,
    SnapshotMismatch,
    build_comparison,
    parse_json,
    percent_reduction,
    render_report,
)


def rec(phase: Phase, cc: int, ticks: int, alloc: int, hints: int, sid: str = "s") -> MetricsRecord:
    return MetricsRecord(phase, cc, Decimal("0.01"), ticks, alloc, hints, sid)


A = (rec(Phase.PRE, 22, 4, 300496, 2), rec(Phase.POST, 19, 2, 287952, 3))
B = (rec(Phase.PRE, 17, 13, 2059288, 2), rec(Phase.POST, 9, 12, 1200040, 1))


@pytest.mark.parametrize(
    "pre, post, expected",
    [
        (22, 19, "13.64"),
        (17, 9, "47.06"),
        (2059288, 1200040, "41.73"),
        (4, 2, "50.00"),
        (13, 12, "7.69"),
        (300496, 287952, "4.17"),
        (7, 7, "0.00"),
    ],
)
def test_percent_reduction(pre: int, post: int, expected: str) -> None:
    assert percent_reduction(pre, post) == Decimal(expected)
    assert str(percent_reduction(pre, post)) == expected


def test_half_up_rounding() -> None:
    assert percent_reduction(8, 7.9996) == Decimal("0.01")
    assert percent_reduction(200, 199.99) == Decimal("0.01")


def test_zero_pre() -> None:
    with pytest.raises(DivisionByZeroPre):
        percent_reduction(0, 3)


@given(st.integers(1, 10**9), st.integers(0, 10**9))
def test_sign_identity(pre: int, post: int) -> None:
    assert percent_reduction(pre, post) == -percent_reduction(pre, post) * -1
    exact = -(Decimal(post) - Decimal(pre)) / Decimal(pre) * 100
    assert abs(percent_reduction(pre, post) - exact) <= Decimal("0.005")


def test_inventory_rows() -> None:
    table = build_comparison(*A)
    got = [(r.percent_change, r.direction) for r in table.rows]
    assert got == [
        (Decimal("13.64"), Direction.IMPROVED),
        (Decimal("50.00"), Direction.IMPROVED),
        (Decimal("4.17"), Direction.IMPROVED),
        (Decimal("-50.00"), Direction.REGRESSED),
    ]


def test_codebase_b_rows() -> None:
    table = build_comparison(*B)
    assert [r.percent_change for r in table.rows] == [Decimal(x) for x in ("47.06", "7.69", "41.73", "50.00")]
    assert all(r.direction is Direction.IMPROVED for r in table.rows)


def test_identical_records() -> None:
    pre = rec(Phase.PRE, 5, 3, 100, 1)
    post = rec(Phase.POST, 5, 3, 100, 1)
    table = build_comparison(pre, post)
    assert all(r.percent_change == Decimal("0.00") and r.direction is Direction.UNCHANGED for r in table.rows)
    text = render_report(table)
    assert text.count("0.00%") == 4


def test_zero_pre_row_is_unchanged_with_note() -> None:
    table = build_comparison(rec(Phase.PRE, 5, 3, 100, 0), rec(Phase.POST, 5, 3, 100, 0))
    row = table.row(HLINT_LABEL)
    assert row.direction is Direction.UNCHANGED and row.percent_change is None and row.note


def test_snapshot_mismatch() -> None:
    with pytest.raises(SnapshotMismatch):
        build_comparison(rec(Phase.PRE, 1, 1, 1, 1, "x"), rec(Phase.POST, 1, 1, 1, 1, "y"))


def test_text_uses_table_labels() -> None:
    text = render_report(build_comparison(*A), {"run_id": "abc"})
    assert "| Cyclomatic Complexity (CC) | 22 | 19 | 13.64% | Improved |" in text
    for label in (RUNTIME_LABEL, MEMORY_LABEL, HLINT_LABEL):
        assert f"| {label} |" in text
    assert "300,496 bytes" in text and "2 hints" in text and "3 hints" in text
    assert "0.01 secs (4 ticks)" in text


def test_json_round_trip() -> None:
    for pre, post in (A, B):
        table = build_comparison(pre, post)
        doc = render_report(table, {"run_id": "r"}, format="json")
        parsed, meta = parse_json(doc)
        assert parsed == table and meta == {"run_id": "r"}
        assert render_report(parsed, meta, format="json") == doc


def test_labels() -> None:
    assert CC_LABEL == "Cyclomatic Complexity (CC)"
