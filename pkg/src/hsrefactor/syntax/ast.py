"""Position-annotated syntax tree for the supported Haskell subset."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Union

from hsrefactor.syntax.lexer import SourceSpan


class ExprKind(enum.Enum):
    VAR = "Var"
    LIT = "Lit"
    APP = "App"  # children[0] is the head, the rest are arguments
    INFIX = "InfixApp"  # text is the operator, children are (lhs, rhs)
    LAMBDA = "Lambda"
    IF = "If"  # children are (cond, then, else)
    CASE = "Case"  # children are (scrutinee,), alternatives in ``alts``
    LET = "Let"  # bindings in ``decls``, children are (body,) or () for a do-let
    DO = "Do"  # statements in ``stmts``
    PAREN = "Paren"
    LIST_COMP = "ListComp"  # children are (head,), qualifiers in ``stmts``
    SECTION = "Section"  # operator section, text is the operator
    OTHER = "Other"  # tuples, lists, records, negation, annotations, opaque text


@dataclass(frozen=True)
class Pattern:
    text: str
    span: SourceSpan
    binders: tuple[str, ...] = ()


class StmtKind(enum.Enum):
    BIND = "bind"  # pat <- expr
    LET = "let"
    EXPR = "expr"


@dataclass(frozen=True)
class Stmt:
    kind: StmtKind
    span: SourceSpan
    expr: Expr | None = None
    pattern: Pattern | None = None
    decls: tuple[Declaration, ...] = ()


@dataclass(frozen=True)
class GuardedRhs:
    guard: Expr
    body: Expr
    span: SourceSpan


@dataclass(frozen=True)
class Alt:
    pattern: Pattern
    span: SourceSpan
    body: Expr | None = None
    guards: tuple[GuardedRhs, ...] = ()
    where: tuple[Declaration, ...] = ()


@dataclass(frozen=True)
class Expr:
    kind: ExprKind
    span: SourceSpan
    children: tuple[Expr, ...] = ()
    text: str = ""
    alts: tuple[Alt, ...] = ()
    decls: tuple[Declaration, ...] = ()
    stmts: tuple[Stmt, ...] = ()
    patterns: tuple[Pattern, ...] = ()

    def __post_init__(self):
        if self.kind is ExprKind.IF and len(self.children) != 3:
            raise ValueError("If needs exactly cond/then/else children")
        if self.kind is ExprKind.CASE and not self.alts:
            raise ValueError("Case needs at least one alternative")


@dataclass(frozen=True)
class Clause:
    patterns: tuple[Pattern, ...]
    span: SourceSpan
    body: Expr | None = None
    guards: tuple[GuardedRhs, ...] = ()
    where: tuple[Declaration, ...] = ()

    def __post_init__(self):
        if bool(self.guards) == (self.body is not None):
            raise ValueError("a clause has either guards or a body")

    @property
    def arity(self) -> int:
        return len(self.patterns)


@dataclass(frozen=True)
class TypeSignature:
    names: tuple[str, ...]
    type_text: str
    span: SourceSpan
    kind = "TypeSignature"

    @property
    def takes_function(self) -> bool:
        """True if some argument or result is itself a function type."""
        depth = 0
        text = self.type_text
        i = 0
        while i < len(text):
            ch = text[i]
            if ch in "([":
                depth += 1
            elif ch in ")]":
                depth -= 1
            elif text.startswith("->", i) and depth > 0:
                return True
            i += 1
        return False


@dataclass(frozen=True)
class FunctionDef:
    name: str
    clauses: tuple[Clause, ...]
    span: SourceSpan
    signature: TypeSignature | None = None
    kind = "FunctionDef"

    def __post_init__(self):
        if not self.clauses:
            raise ValueError(f"function {self.name} has no clauses")
        if len({c.arity for c in self.clauses}) != 1:
            raise ValueError(f"clauses of {self.name} disagree on arity")

    @property
    def arity(self) -> int:
        return self.clauses[0].arity


@dataclass(frozen=True)
class DataDecl:
    name: str
    constructors: tuple[str, ...]
    text: str
    span: SourceSpan
    keyword: str = "data"
    kind = "DataDecl"


@dataclass(frozen=True)
class ClassDecl:
    name: str
    text: str
    span: SourceSpan
    decls: tuple[Declaration, ...] = ()
    kind = "ClassDecl"


@dataclass(frozen=True)
class InstanceDecl:
    class_name: str
    type_text: str
    text: str
    span: SourceSpan
    decls: tuple[Declaration, ...] = ()
    kind = "InstanceDecl"


@dataclass(frozen=True)
class OtherDecl:
    """Anything outside the supported subset, kept verbatim."""

    text: str
    span: SourceSpan
    reason: str = ""
    kind = "Other"


Declaration = Union[FunctionDef, TypeSignature, DataDecl, ClassDecl, InstanceDecl, OtherDecl]


@dataclass(frozen=True)
class Import:
    module: str
    span: SourceSpan
    qualified: bool = False
    alias: str | None = None


@dataclass(frozen=True)
class HsModule:
    name: str
    imports: tuple[Import, ...] = ()
    declarations: tuple[Declaration, ...] = ()
    exports: tuple[str, ...] | None = None
    file: str = ""
    items: int = field(default=0, compare=False)

    def functions(self) -> list[FunctionDef]:
        return [d for d in self.declarations if isinstance(d, FunctionDef)]


def subexprs(node: Expr | Stmt | Alt | GuardedRhs | Clause) -> Iterator[Expr]:
    """Direct child expressions of ``node`` in evaluation order.

    Local declarations are not included; see :func:`local_functions`.
    """
    if isinstance(node, Expr):
        if node.kind is ExprKind.CASE:
            yield node.children[0]
            for alt in node.alts:
                yield from subexprs(alt)
        elif node.kind is ExprKind.LIST_COMP:
            for stmt in node.stmts:
                yield from subexprs(stmt)
            yield from node.children
        elif node.kind is ExprKind.DO:
            for stmt in node.stmts:
                yield from subexprs(stmt)
        else:
            yield from node.children
    elif isinstance(node, Stmt):
        if node.expr is not None:
            yield node.expr
    elif isinstance(node, (Alt, Clause)):
        if node.body is not None:
            yield node.body
        for g in node.guards:
            yield g.guard
            yield g.body
    elif isinstance(node, GuardedRhs):
        yield node.guard
        yield node.body


def local_functions(decls: tuple[Declaration, ...]) -> Iterator[FunctionDef]:
    for d in decls:
        if isinstance(d, FunctionDef):
            yield d


def walk(expr: Expr) -> Iterator[Expr]:
    """Pre-order traversal including expressions inside local bindings."""
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        kids = list(subexprs(e))
        for fn in local_functions(_local_decls(e)):
            for clause in fn.clauses:
                kids.extend(clause_exprs(clause))
        stack.extend(reversed(kids))


def _local_decls(e: Expr) -> tuple[Declaration, ...]:
    decls = list(e.decls)
    for alt in e.alts:
        decls.extend(alt.where)
    for stmt in e.stmts:
        decls.extend(stmt.decls)
    return tuple(decls)


def clause_exprs(clause: Clause) -> list[Expr]:
    """Top expressions of a clause: where-bound bodies first, then the rhs."""
    out: list[Expr] = []
    for fn in local_functions(clause.where):
        for c in fn.clauses:
            out.extend(clause_exprs(c))
    out.extend(subexprs(clause))
    return out


def function_exprs(fn: FunctionDef) -> Iterator[Expr]:
    """Every expression node of a function, including local bindings."""
    for clause in fn.clauses:
        for top in clause_exprs(clause):
            yield from walk(top)
