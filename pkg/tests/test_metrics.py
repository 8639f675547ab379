from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hsgen import functions, if_wrapped
from hsrefactor.metrics import (
    CfgNode,
    ControlFlowGraph,
    FeatureCount,
    InvalidCfg,
    NodeKind,
    SizeClass,
    build_cfg,
    classify_size,
    cyclomatic_complexity,
    decision_point_cc,
    feature_count,
    mccabe,
    total_complexity,
)
from hsrefactor.syntax import parse_module

FIXTURES = Path(__file__).parent / "fixtures"
CC_EXPECTED = json.loads((FIXTURES / "cc" / "expected.json").read_text())


def only_function(source: str):
    [fn] = parse_module(source).functions()
    return fn


def test_identity_cfg_shape() -> None:
    cfg = build_cfg(only_function("f x = x"))
    assert (cfg.N, cfg.E, cfg.P) == (3, 2, 1)
    assert [n.kind for n in cfg.nodes] == [NodeKind.ENTRY, NodeKind.STATEMENT, NodeKind.EXIT]
    assert cyclomatic_complexity(cfg) == 1


def test_if_cfg_has_two_way_branch() -> None:
    cfg = build_cfg(only_function("f x = if x > 0 then 1 else 0"))
    cfg.validate()
    [branch] = [n for n in cfg.nodes if n.kind is NodeKind.BRANCH]
    assert len(cfg.successors(branch.id)) == 2
    assert cfg.E - cfg.N + 2 == 2


def test_case3_cfg() -> None:
    cfg = build_cfg(only_function("f n = case n of\n  0 -> 1\n  1 -> 2\n  _ -> 3\n"))
    [branch] = [n for n in cfg.nodes if n.kind is NodeKind.BRANCH]
    assert len(cfg.successors(branch.id)) == 3
    assert cfg.E - cfg.N + 2 == 3


@pytest.mark.parametrize(
    "e, n, p, cc",
    [(2, 3, 1, 1), (4, 4, 1, 2), (9, 7, 1, 4)],
)
def test_mccabe_formula(e: int, n: int, p: int, cc: int) -> None:
    assert mccabe(e, n, p) == cc


def test_guards_fixture_graph_counts() -> None:
    fn = parse_module((FIXTURES / "cc" / "guards.hs").read_text()).functions()[0]
    cfg = build_cfg(fn)
    assert cyclomatic_complexity(cfg) == decision_point_cc(fn) == 4


def test_empty_graph_is_invalid() -> None:
    with pytest.raises(InvalidCfg):
        cyclomatic_complexity(ControlFlowGraph())


def test_validate_rejects_unreachable_node() -> None:
    cfg = ControlFlowGraph(
        nodes=[CfgNode(0, NodeKind.ENTRY), CfgNode(1, NodeKind.EXIT), CfgNode(2, NodeKind.STATEMENT)],
        edges=[(0, 1), (2, 1)],
    )
    with pytest.raises(InvalidCfg):
        cfg.validate()


@pytest.mark.parametrize("name", sorted(CC_EXPECTED))
def test_hand_derived_fixture(name: str) -> None:
    module = parse_module((FIXTURES / "cc" / name).read_text(), name)
    score = total_complexity(module)
    assert score.per_function == CC_EXPECTED[name]
    for fn in module.functions():
        assert decision_point_cc(fn) == CC_EXPECTED[name][fn.name]


def test_decision_point_examples() -> None:
    assert decision_point_cc(only_function("f x = x")) == 1
    assert decision_point_cc(only_function("f x = if x then 1 else 2")) == 2
    source = "f 0 = 0\nf n\n  | n > 0 && even n = 1\n  | otherwise = 2\n"
    assert decision_point_cc(only_function(source)) == 4


def test_total_complexity() -> None:
    assert total_complexity(parse_module("module M where\n")).total == 0
    assert total_complexity(parse_module("module M where\n")).per_function == {}
    source = (
        "a x = x\n"
        "b x = if x then 1 else 0\n"
        "c 0 = 0\nc n\n  | n > 0 && even n = 1\n  | otherwise = 2\n"
    )
    score = total_complexity(parse_module(source))
    assert score.per_function == {"a": 1, "b": 2, "c": 4}
    assert score.total == 7


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(functions())
def test_cfg_matches_decision_points(case) -> None:
    source, expected = case
    fn = only_function(source)
    cfg = build_cfg(fn)
    cfg.validate()
    assert cfg.P == 1
    assert cyclomatic_complexity(cfg) == decision_point_cc(fn) == expected


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(if_wrapped())
def test_adding_if_increments_both_measures(case) -> None:
    before, after, expected = case
    f0, f1 = only_function(before), only_function(after)
    assert decision_point_cc(f0) == expected
    assert decision_point_cc(f1) == expected + 1
    assert cyclomatic_complexity(build_cfg(f1)) == cyclomatic_complexity(build_cfg(f0)) + 1


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(functions(), min_size=1, max_size=4))
def test_total_at_least_function_count(cases) -> None:
    source = "".join(src.replace("f ", f"f{i} ", 1).replace("\nf ", f"\nf{i} ")
                     for i, (src, _) in enumerate(cases))
    module = parse_module(source)
    score = total_complexity(module)
    assert all(v >= 1 for v in score.per_function.values())
    assert score.total >= len(module.functions())
    assert score.total == sum(score.per_function.values())


def test_feature_count_plain_function() -> None:
    assert feature_count(parse_module("f x = x + 1")).F == 0


def test_feature_count_do_and_class() -> None:
    source = "class C a where\n  c :: a -> Int\nmain = do\n  print 1\n"
    fc = feature_count(parse_module(source))
    assert (fc.type_classes, fc.monadic_compositions, fc.higher_order_functions) == (1, 1, 0)
    assert fc.F == 2


def test_feature_count_point_free_pre() -> None:
    fc = feature_count(parse_module((FIXTURES / "point_free" / "pre.hs").read_text()))
    assert fc.higher_order_functions >= 2


def test_feature_count_bind_operators_and_instances() -> None:
    source = (
        "instance Show T where\n  show _ = \"T\"\n"
        "run = getLine >>= putStrLn >> return ()\n"
        "twice :: (a -> a) -> a -> a\ntwice h = h . h\n"
    )
    fc = feature_count(parse_module(source))
    assert fc == FeatureCount(higher_order_functions=1, type_classes=1, monadic_compositions=2)


@pytest.mark.parametrize(
    "loc, cls",
    [
        (0, SizeClass.BELOW_RANGE),
        (99, SizeClass.BELOW_RANGE),
        (100, SizeClass.SMALL),
        (499, SizeClass.SMALL),
        (500, SizeClass.MEDIUM),
        (1999, SizeClass.MEDIUM),
        (2000, SizeClass.LARGE),
        (10**6, SizeClass.LARGE),
    ],
)
def test_classify_size_breakpoints(loc: int, cls: SizeClass) -> None:
    assert classify_size(loc) is cls


@given(st.integers(0, 10_000))
def test_classify_size_is_piecewise_constant(loc: int) -> None:
    expected = (
        SizeClass.BELOW_RANGE if loc < 100
        else SizeClass.SMALL if loc < 500
        else SizeClass.MEDIUM if loc < 2000
        else SizeClass.LARGE
    )
    assert classify_size(loc) is expected


def test_classify_size_rejects_negative() -> None:
    with pytest.raises(ValueError):
        classify_size(-1)
