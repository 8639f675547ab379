from __future__ import annotations

from decimal import Decimal
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hsrefactor.corpus import (
    DuplicatePhase,
    MetricsRecord,
    MetricsStore,
    Phase,
    SelectionCriteria,
    build_search_filter,
    evaluate_candidate,
    load_snapshot,
    make_record,
)
from hsrefactor.errors import NoSources
from hsrefactor.metrics import SizeClass
from hsrefactor.toolchain import ProfileStats, ReplayEntry, ReplayRunner

FEATURE_HEADER = (
    "module Big where\n"
    "class Pretty a where\n"
    "  pretty :: a -> String\n"
    "main = do\n"
    "  print (map succ [1, 2])\n"
    "  print (map pred [1, 2])\n"
)


def write_project(root: Path, loc: int) -> Path:
    """A module with F = 4 and exactly ``loc`` lines of code."""
    root.mkdir(parents=True, exist_ok=True)
    header_lines = FEATURE_HEADER.count("\n")
    body = "".join(f"v{i} = {i}\n" for i in range(loc - header_lines))
    (root / "Big.hs").write_text(FEATURE_HEADER + body)
    return root


def test_load_snapshot(tmp_path: Path) -> None:
    (tmp_path / "src").mkdir()
    (tmp_path / "src" / "A.hs").write_text("module A where\nf = 1\n")
    (tmp_path / "B.hs").write_text("module B where\n-- c\ng = 2\n")
    (tmp_path / "notes.txt").write_text("ignored")
    (tmp_path / ".stack-work").mkdir()
    (tmp_path / ".stack-work" / "Gen.hs").write_text("x = 1\n")
    (tmp_path / "dist-newstyle").mkdir()
    (tmp_path / "dist-newstyle" / "Gen.hs").write_text("x = 1\n")
    snap = load_snapshot(tmp_path)
    assert list(snap.files) == ["B.hs", "src/A.hs"]
    assert snap.loc == 4
    assert load_snapshot(tmp_path).content_hash == snap.content_hash
    (tmp_path / "B.hs").write_text("module B where\ng = 3\n")
    assert load_snapshot(tmp_path).content_hash != snap.content_hash


def test_load_snapshot_errors(tmp_path: Path) -> None:
    with pytest.raises(NoSources):
        load_snapshot(tmp_path)
    with pytest.raises(NoSources):
        load_snapshot(tmp_path / "missing")


def test_hash_independent_of_location(tmp_path: Path) -> None:
    for name in ("one", "two"):
        (tmp_path / name).mkdir()
        (tmp_path / name / "M.hs").write_text("module M where\nf = 1\n")
    assert load_snapshot(tmp_path / "one").content_hash == load_snapshot(tmp_path / "two").content_hash


@pytest.mark.parametrize(
    "args, expected",
    [
        (("Haskell", 50, 2000), "language:Haskell stars:>50 size:<2000"),
        (("Haskell", 0, 0), "language:Haskell stars:>0 size:<0"),
        (("Haskell", 100, 500), "language:Haskell stars:>100 size:<500"),
    ],
)
def test_search_filter(args, expected: str) -> None:
    lang, stars, size = args
    assert build_search_filter(SelectionCriteria(lang, stars, size)) == expected


def test_default_search_filter() -> None:
    assert build_search_filter(SelectionCriteria()) == "language:Haskell stars:>50 size:<2000"


def test_accepts_medium_candidate(tmp_path: Path) -> None:
    snap = load_snapshot(write_project(tmp_path / "p", 600))
    assert snap.loc == 600
    verdict = evaluate_candidate(snap, SelectionCriteria(size_class=SizeClass.MEDIUM, min_features=3))
    assert verdict.accepted, verdict.reasons
    assert any("F=4" in r for r in verdict.reasons)


def test_rejects_small_codebase(tmp_path: Path) -> None:
    snap = load_snapshot(write_project(tmp_path / "p", 50))
    verdict = evaluate_candidate(snap, SelectionCriteria(min_features=0))
    assert not verdict.accepted
    assert any("BelowRange" in r for r in verdict.reasons)


def test_rejects_without_features(tmp_path: Path) -> None:
    (tmp_path / "M.hs").write_text("".join(f"v{i} = {i}\n" for i in range(150)))
    verdict = evaluate_candidate(load_snapshot(tmp_path), SelectionCriteria(min_features=1))
    assert not verdict.accepted


def test_hlint_check_with_runner(tmp_path: Path) -> None:
    snap = load_snapshot(write_project(tmp_path / "p", 600))
    good = ReplayRunner([ReplayEntry("hlint", stdout="No hints\n")])
    assert evaluate_candidate(snap, SelectionCriteria(), good).accepted
    bad = ReplayRunner([ReplayEntry("hlint", stdout="a.hs:1:1: Warning: x\n3 hints\n")])
    verdict = evaluate_candidate(snap, SelectionCriteria(), bad)
    assert not verdict.accepted
    assert any(r.startswith("hlint: failed") for r in verdict.reasons)


@given(st.integers(0, 10), st.integers(0, 10))
def test_selection_monotone_in_threshold(low: int, extra: int) -> None:
    snap_root = Path(__file__).parent / "fixtures" / "inventory"
    snap = load_snapshot(snap_root)
    strict = evaluate_candidate(snap, SelectionCriteria(min_features=low + extra))
    lenient = evaluate_candidate(snap, SelectionCriteria(min_features=low))
    assert not (strict.accepted and not lenient.accepted)


def test_metrics_store(tmp_path: Path) -> None:
    store = MetricsStore(tmp_path)
    pre = make_record(Phase.PRE, "snap", 22, ProfileStats(Decimal("0.01"), 4, 1000, 300496), None)
    store.record("run", pre)
    with pytest.raises(DuplicatePhase):
        store.record("run", pre)
    assert store.load("run", Phase.POST) is None
    post = MetricsRecord(Phase.POST, 19, Decimal("0.01"), 2, 287952, 3, "snap")
    store.record("run", post)
    assert store.load("run", Phase.PRE) == pre
    assert store.load("run", Phase.POST) == post
    assert (tmp_path / "metrics" / "run" / "pre.json").exists()


def test_post_needs_pre(tmp_path: Path) -> None:
    with pytest.raises(Exception):
        MetricsStore(tmp_path).record("r", MetricsRecord(Phase.POST, 1, None, None, None, None, "s"))


def test_record_rejects_negative() -> None:
    with pytest.raises(ValueError):
        MetricsRecord(Phase.PRE, -1, None, None, None, None, "s")
