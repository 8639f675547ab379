"""Decision-point counting and module totals."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from hsrefactor.metrics.cfg import SHORT_CIRCUIT, build_cfg, cyclomatic_complexity
from hsrefactor.syntax.ast import Alt, Clause, Expr, ExprKind, FunctionDef, HsModule, StmtKind
from hsrefactor.syntax.lexer import SourceSpan


@dataclass
class ComplexityScore:
    per_function: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.per_function.values())

    def to_dict(self) -> dict:
        return {"per_function": dict(self.per_function), "total": self.total}


def _decisions(node) -> int:
    """Count decision points by reflecting over every field of the tree.

    Deliberately does not share traversal code with the CFG builder so the two
    measures stay independent.
    """
    if isinstance(node, (tuple, list)):
        return sum(_decisions(x) for x in node)
    if not dataclasses.is_dataclass(node) or isinstance(node, SourceSpan):
        return 0
    own = 0
    if isinstance(node, Expr):
        if node.kind is ExprKind.IF:
            own = 1
        elif node.kind is ExprKind.CASE:
            own = len(node.alts) - 1
        elif node.kind is ExprKind.INFIX and node.text in SHORT_CIRCUIT:
            own = 1
        elif node.kind is ExprKind.LIST_COMP:
            own = sum(1 for q in node.stmts if q.kind is not StmtKind.LET)
    elif isinstance(node, (Clause, Alt)) and node.guards:
        own = len(node.guards) - 1
    elif isinstance(node, FunctionDef):
        own = len(node.clauses) - 1
    for f in dataclasses.fields(node):
        if f.name == "signature":
            continue
        own += _decisions(getattr(node, f.name))
    return own


def decision_point_cc(fn: FunctionDef) -> int:
    """1 + number of branching constructs in ``fn`` (local bindings included)."""
    return 1 + _decisions(fn)


def function_complexity(fn: FunctionDef) -> int:
    return cyclomatic_complexity(build_cfg(fn))


def total_complexity(module: HsModule | list[HsModule]) -> ComplexityScore:
    """Per-function CC for every top-level function and their sum.

    With several modules, functions are keyed ``Module.name``.
    """
    if isinstance(module, HsModule):
        return ComplexityScore({fn.name: function_complexity(fn) for fn in module.functions()})
    score = ComplexityScore()
    for m in module:
        for fn in m.functions():
            score.per_function[f"{m.name}.{fn.name}"] = function_complexity(fn)
    return score
