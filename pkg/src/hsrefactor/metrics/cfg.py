"""Per-function control-flow graphs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from hsrefactor.errors import HsRefactorError
from hsrefactor.syntax.ast import (
    Alt,
    Clause,
    Declaration,
    Expr,
    ExprKind,
    FunctionDef,
    StmtKind,
)
from hsrefactor.syntax.lexer import SourceSpan

SHORT_CIRCUIT = frozenset({"&&", "||"})


class InvalidCfg(HsRefactorError):
    pass


class NodeKind(enum.Enum):
    ENTRY = "entry"
    EXIT = "exit"
    STATEMENT = "statement"
    BRANCH = "branch"
    MERGE = "merge"


@dataclass(frozen=True)
class CfgNode:
    id: int
    kind: NodeKind
    span: SourceSpan | None = None
    label: str = ""


@dataclass
class ControlFlowGraph:
    nodes: list[CfgNode] = field(default_factory=list)
    edges: list[tuple[int, int]] = field(default_factory=list)
    name: str = ""

    @property
    def E(self) -> int:
        return len(self.edges)

    @property
    def N(self) -> int:
        return len(self.nodes)

    @property
    def P(self) -> int:
        """Connected components of the underlying undirected graph."""
        parent = {n.id: n.id for n in self.nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        return len({find(n) for n in parent})

    def successors(self, node_id: int) -> list[int]:
        return [b for a, b in self.edges if a == node_id]

    def validate(self) -> None:
        ids = {n.id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise InvalidCfg("duplicate node ids")
        for a, b in self.edges:
            if a not in ids or b not in ids:
                raise InvalidCfg(f"edge ({a}, {b}) references a missing node")
        entries = [n.id for n in self.nodes if n.kind is NodeKind.ENTRY]
        exits = [n.id for n in self.nodes if n.kind is NodeKind.EXIT]
        if len(entries) != self.P or len(exits) != self.P:
            raise InvalidCfg("need exactly one entry and one exit per component")
        seen = set(entries)
        todo = list(entries)
        while todo:
            for nxt in self.successors(todo.pop()):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        if seen != ids:
            raise InvalidCfg(f"unreachable nodes: {sorted(ids - seen)}")


class _Builder:
    def __init__(self, name: str):
        self.cfg = ControlFlowGraph(name=name)

    def node(self, kind: NodeKind, span: SourceSpan | None = None, label: str = "") -> int:
        nid = len(self.cfg.nodes)
        self.cfg.nodes.append(CfgNode(nid, kind, span, label))
        return nid

    def edge(self, a: int, b: int) -> None:
        self.cfg.edges.append((a, b))

    def fork(self, pred: int, span: SourceSpan | None, label: str) -> int:
        b = self.node(NodeKind.BRANCH, span, label)
        self.edge(pred, b)
        return b

    def join(self, tails: list[int], span: SourceSpan | None) -> int:
        m = self.node(NodeKind.MERGE, span)
        for t in tails:
            self.edge(t, m)
        return m

    # functions and clauses

    def function(self, fn: FunctionDef, pred: int) -> int:
        if len(fn.clauses) == 1:
            return self.clause(fn.clauses[0], pred)
        b = self.fork(pred, fn.span, f"clauses of {fn.name}")
        return self.join([self.clause(c, b) for c in fn.clauses], fn.span)

    def locals(self, decls: tuple[Declaration, ...], pred: int) -> int:
        for d in decls:
            if isinstance(d, FunctionDef):
                pred = self.function(d, pred)
        return pred

    def clause(self, clause: Clause | Alt, pred: int) -> int:
        pred = self.locals(clause.where, pred)
        if clause.body is not None:
            return self.expr(clause.body, pred)
        if len(clause.guards) == 1:
            g = clause.guards[0]
            return self.expr(g.body, self.expr(g.guard, pred))
        b = self.fork(pred, clause.span, "guards")
        tails = [self.expr(g.body, self.expr(g.guard, b)) for g in clause.guards]
        return self.join(tails, clause.span)

    # expressions

    def expr(self, e: Expr, pred: int) -> int:
        kind = e.kind
        if kind is ExprKind.IF:
            cond, then, other = e.children
            b = self.fork(self.expr(cond, pred), e.span, "if")
            return self.join([self.expr(then, b), self.expr(other, b)], e.span)
        if kind is ExprKind.CASE:
            s = self.expr(e.children[0], pred)
            if len(e.alts) == 1:
                return self.clause(e.alts[0], s)
            b = self.fork(s, e.span, "case")
            return self.join([self.clause(alt, b) for alt in e.alts], e.span)
        if kind is ExprKind.INFIX and e.text in SHORT_CIRCUIT:
            lhs, rhs = e.children
            b = self.fork(self.expr(lhs, pred), e.span, e.text)
            return self.join([self.expr(rhs, b), b], e.span)
        if kind is ExprKind.LET:
            pred = self.locals(e.decls, pred)
            for child in e.children:
                pred = self.expr(child, pred)
            return pred
        if kind is ExprKind.DO:
            for stmt in e.stmts:
                pred = self._stmt(stmt, pred)
            return pred
        if kind is ExprKind.LIST_COMP:
            return self._comprehension(e, pred)
        if not e.children:
            s = self.node(NodeKind.STATEMENT, e.span, e.text)
            self.edge(pred, s)
            return s
        for child in e.children:
            pred = self.expr(child, pred)
        return pred

    def _stmt(self, stmt, pred: int) -> int:
        if stmt.kind is StmtKind.LET:
            return self.locals(stmt.decls, pred)
        return self.expr(stmt.expr, pred)

    def _comprehension(self, e: Expr, pred: int) -> int:
        skips = []
        for q in e.stmts:
            pred = self._stmt(q, pred)
            if q.kind is not StmtKind.LET:
                pred = self.fork(pred, q.span, "qualifier")
                skips.append(pred)
        tail = self.expr(e.children[0], pred)
        if not skips:
            return tail
        return self.join([tail, *skips], e.span)


def build_cfg(fn: FunctionDef) -> ControlFlowGraph:
    """Single-entry/single-exit graph of one function (local bindings inlined)."""
    b = _Builder(fn.name)
    entry = b.node(NodeKind.ENTRY, fn.span, fn.name)
    tail = b.function(fn, entry)
    exit_ = b.node(NodeKind.EXIT, fn.span, fn.name)
    b.edge(tail, exit_)
    return b.cfg


def mccabe(edges: int, nodes: int, components: int) -> int:
    if components <= 0:
        raise InvalidCfg("a control-flow graph needs at least one component")
    return edges - nodes + 2 * components


def cyclomatic_complexity(cfg: ControlFlowGraph) -> int:
    """E - N + 2P."""
    return mccabe(cfg.E, cfg.N, cfg.P)
