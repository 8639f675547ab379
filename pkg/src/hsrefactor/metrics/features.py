"""Functional-feature counts used to pick candidate projects."""

from __future__ import annotations

from dataclasses import dataclass

from hsrefactor.syntax.ast import ClassDecl, ExprKind, FunctionDef, HsModule, InstanceDecl, function_exprs

HIGHER_ORDER = frozenset({
    "map", "filter", "foldr", "foldl", "foldl'", "foldr1", "foldl1", "zipWith", "concatMap",
    "any", "all", "iterate", "takeWhile", "dropWhile", "mapM", "mapM_", "forM", "forM_",
    "traverse", "fmap", "sortBy", "sortOn", "groupBy", "until",
})
MONADIC_OPS = frozenset({">>=", ">>", "=<<", ">=>"})


@dataclass(frozen=True)
class FeatureCount:
    higher_order_functions: int = 0
    type_classes: int = 0
    monadic_compositions: int = 0

    @property
    def F(self) -> int:
        return self.higher_order_functions + self.type_classes + self.monadic_compositions

    def to_dict(self) -> dict:
        return {
            "higher_order_functions": self.higher_order_functions,
            "type_classes": self.type_classes,
            "monadic_compositions": self.monadic_compositions,
            "F": self.F,
        }


def _head_name(text: str) -> str:
    return text.rsplit(".", 1)[-1] if "." in text.strip(".") else text


def _is_higher_order_app(e) -> bool:
    head, *args = e.children
    if head.kind is ExprKind.VAR and _head_name(head.text) in HIGHER_ORDER:
        return True
    for a in args:
        while a.kind is ExprKind.PAREN and a.children:
            a = a.children[0]
        if a.kind in (ExprKind.LAMBDA, ExprKind.SECTION):
            return True
    return False


def _function_features(fn: FunctionDef) -> tuple[int, int]:
    higher = 1 if fn.signature is not None and fn.signature.takes_function else 0
    monadic = 0
    for e in function_exprs(fn):
        if e.kind is ExprKind.APP and _is_higher_order_app(e):
            higher += 1
        elif e.kind is ExprKind.DO:
            monadic += 1
        elif e.kind is ExprKind.INFIX and e.text in MONADIC_OPS:
            monadic += 1
    return higher, monadic


def feature_count(module: HsModule | list[HsModule]) -> FeatureCount:
    """Count higher-order uses, class/instance declarations and monadic compositions.

    Higher-order uses are counted per application site (a known combinator
    head, or a lambda/section argument) plus one per signature taking or
    returning a function.
    """
    modules = [module] if isinstance(module, HsModule) else list(module)
    higher = classes = monadic = 0
    for m in modules:
        for d in m.declarations:
            if isinstance(d, (ClassDecl, InstanceDecl)):
                classes += 1
        for fn in m.functions():
            h, mo = _function_features(fn)
            higher += h
            monadic += mo
    return FeatureCount(higher, classes, monadic)
