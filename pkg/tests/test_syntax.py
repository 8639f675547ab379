from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsgen import functions
from hsrefactor.syntax import (
    ExprKind,
    FunctionDef,
    LayoutError,
    MalformedModuleHeader,
    OtherDecl,
    TokenKind,
    UnsupportedSource,
    UnterminatedBlockComment,
    UnterminatedString,
    count_loc,
    extract_functions,
    function_exprs,
    parse_module,
    tokenize,
    untokenize,
    walk,
)
from hsrefactor.syntax.ast import subexprs

FIXTURES = Path(__file__).parent / "fixtures"

SAMPLE = """\
module Sample (f, g, Shape(..)) where

import qualified Data.Map as M
import Data.List (sortBy)

-- | guarded
f :: Int -> Int
f x
  | x > 0 = 1
  | otherwise = 0

g 0 = 1
g n = case n of
  1 -> 2
  _ -> if n > 3 && n < 10 then 5 else 6
  where
    h y = y + 1

main :: IO ()
main = do
  let xs = [x | x <- [1..10], odd x]
  mapM_ print xs

data Shape = Circle Double | Rect Double Double deriving Show
class Area a where
  area :: a -> Double
instance Area Shape where
  area _ = 0
"""


def kinds(tokens):
    return [(t.kind, t.text) for t in tokens]


def test_tokenize_empty() -> None:
    assert tokenize("") == []


def test_tokenize_minimal_binding() -> None:
    assert kinds(tokenize("x = 1")) == [
        (TokenKind.IDENTIFIER, "x"),
        (TokenKind.OPERATOR, "="),
        (TokenKind.LITERAL, "1"),
    ]


def test_tokenize_keeps_block_comment() -> None:
    toks = tokenize("{- a -} f y = y")
    assert [t.kind for t in toks] == [
        TokenKind.COMMENT,
        TokenKind.IDENTIFIER,
        TokenKind.IDENTIFIER,
        TokenKind.OPERATOR,
        TokenKind.IDENTIFIER,
    ]
    assert untokenize(toks) == "{- a -} f y = y"


def test_tokenize_errors_carry_spans() -> None:
    with pytest.raises(UnterminatedString) as e:
        tokenize('x = "abc')
    assert e.value.span.start_line == 1
    with pytest.raises(UnterminatedBlockComment):
        tokenize("{- {- nested -} x")


def test_nested_block_comment_is_one_token() -> None:
    toks = tokenize("{- a {- b -} c -}\nx")
    assert toks[0].kind is TokenKind.COMMENT
    assert toks[0].text == "{- a {- b -} c -}"


def test_sample_round_trips() -> None:
    assert untokenize(tokenize(SAMPLE)) == SAMPLE


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("abxyz019 \n\t=+-*/()[]{},;`'\"\\|<>.:_$&")), max_size=80))
def test_round_trip_arbitrary_text(source: str) -> None:
    try:
        toks = tokenize(source)
    except (UnterminatedString, UnterminatedBlockComment):
        return
    assert untokenize(toks) == source


@settings(max_examples=100, deadline=None)
@given(functions())
def test_round_trip_generated_functions(case) -> None:
    source, _ = case
    assert untokenize(tokenize(source)) == source


def test_parse_identity() -> None:
    m = parse_module("module M where\nf x = x")
    assert m.name == "M"
    [fn] = m.functions()
    assert fn.name == "f" and len(fn.clauses) == 1


def test_parse_guards() -> None:
    m = parse_module("module M where\nf x\n  | x > 0 = 1\n  | otherwise = 0")
    [fn] = m.functions()
    [clause] = fn.clauses
    assert clause.body is None
    assert len(clause.guards) == 2
    assert clause.guards[1].guard.text == "otherwise"


def test_parse_processnumbers_fixture() -> None:
    m = parse_module((FIXTURES / "point_free" / "pre.hs").read_text())
    [fn] = m.functions()
    assert fn.name == "processNumbers"
    assert fn.signature is not None
    exprs = list(function_exprs(fn))
    assert any(e.kind is ExprKind.LAMBDA for e in exprs)
    heads = {e.children[0].text for e in exprs if e.kind is ExprKind.APP}
    assert {"map", "filter"} <= heads


@pytest.mark.parametrize("name", ["post_verbatim.hs", "post_squared.hs"])
def test_parse_refactored_fixtures(name: str) -> None:
    m = parse_module((FIXTURES / "point_free" / name).read_text())
    [fn] = m.functions()
    assert fn.name == "sumOfSquaresOfOdds"
    sections = [e.text for e in function_exprs(fn) if e.kind is ExprKind.SECTION]
    assert sections == (["*"] if "verbatim" in name else ["^"])


def test_sample_declarations() -> None:
    m = parse_module(SAMPLE, "Sample.hs")
    assert m.exports == ("f", "g", "Shape")
    assert [(i.module, i.qualified, i.alias) for i in m.imports] == [
        ("Data.Map", True, "M"),
        ("Data.List", False, None),
    ]
    assert [d.kind for d in m.declarations] == [
        "TypeSignature", "FunctionDef", "FunctionDef", "TypeSignature", "FunctionDef",
        "DataDecl", "ClassDecl", "InstanceDecl",
    ]
    assert not any(isinstance(d, OtherDecl) for d in m.declarations)


def test_parse_totality_counts_every_item() -> None:
    m = parse_module(SAMPLE)
    clauses = sum(len(d.clauses) for d in m.declarations if isinstance(d, FunctionDef))
    others = sum(1 for d in m.declarations if not isinstance(d, FunctionDef))
    assert m.items == len(m.imports) + clauses + others


def test_unparseable_declaration_becomes_other() -> None:
    source = "module M where\nf x = x\ntype family F a where\n  F Int = Bool\ng y = y\n"
    m = parse_module(source)
    assert [fn.name for fn in m.functions()] == ["f", "g"]
    others = [d for d in m.declarations if isinstance(d, OtherDecl)]
    assert len(others) == 1
    assert others[0].text.startswith("type family F a where")


def test_malformed_header() -> None:
    with pytest.raises(MalformedModuleHeader) as e:
        parse_module("module where\nf = 1")
    assert e.value.span is not None


def test_mixed_indentation_is_layout_error() -> None:
    with pytest.raises(LayoutError) as e:
        parse_module("module M where\nf x = y\n  where\n\ty = x\n    z = 1\n")
    assert e.value.span is not None


def test_cpp_is_unsupported() -> None:
    with pytest.raises(UnsupportedSource):
        parse_module("module M where\n#if FOO\nf = 1\n#endif\n")


def test_span_nesting() -> None:
    m = parse_module(SAMPLE)
    for fn in m.functions():
        for e in function_exprs(fn):
            for child in subexprs(e):
                assert e.span.contains(child.span), (e, child)


@settings(max_examples=100, deadline=None)
@given(functions())
def test_span_nesting_generated(case) -> None:
    source, _ = case
    [fn] = parse_module(source).functions()
    for clause in fn.clauses:
        assert fn.span.contains(clause.span)
    for e in function_exprs(fn):
        for child in subexprs(e):
            assert e.span.contains(child.span)


def test_parse_is_deterministic() -> None:
    assert parse_module(SAMPLE) == parse_module(SAMPLE)


def test_extract_functions() -> None:
    assert extract_functions(parse_module("module M where\ndata T = T")) == []
    m = parse_module("module M where\nf 0 = 1\nf n = n\ng = 2\n  where h = 3\n")
    fns = extract_functions(m)
    assert [fn.name for fn in fns] == ["f", "g"]
    assert len(fns[0].clauses) == 2


def test_extract_functions_attaches_signature() -> None:
    fns = extract_functions(parse_module(SAMPLE))
    by_name = {fn.name: fn for fn in fns}
    assert by_name["f"].signature.type_text == "Int -> Int"
    assert by_name["g"].signature is None


def test_walk_reaches_where_bindings() -> None:
    [_, g, _] = parse_module(SAMPLE).functions()
    assert any(e.kind is ExprKind.INFIX and e.text == "+" for e in function_exprs(g))
    body = g.clauses[1].body
    assert body.kind is ExprKind.CASE
    assert sum(1 for _ in walk(body)) > 5


def test_count_loc_examples() -> None:
    assert count_loc("") == 0
    assert count_loc("-- c\n\nf x = x") == 1
    source = (FIXTURES / "loc120.hs").read_text()
    assert len(source.splitlines()) == 120
    assert count_loc(source) == 100


def test_count_loc_ignores_block_comments() -> None:
    assert count_loc("{- one\ntwo\n-}\nf = 1\n") == 1
