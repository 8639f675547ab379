"""Deterministic structural facts about a set of Haskell files."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from hsrefactor.artifacts import DependencyEdge, ModuleSummary
from hsrefactor.metrics import decision_point_cc, function_complexity
from hsrefactor.syntax import ExprKind, HsModule, LexError, ParseError, function_exprs, parse_module

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FunctionInfo:
    qualified: str
    module: str
    name: str
    file: str
    position: tuple[int, int]
    cc: int


@dataclass
class CodeFacts:
    modules: dict[str, ModuleSummary] = field(default_factory=dict)
    functions: dict[str, FunctionInfo] = field(default_factory=dict)
    edges: set[tuple[str, str, str]] = field(default_factory=set)
    exports: dict[str, tuple[str, ...] | None] = field(default_factory=dict)
    parsed: dict[str, HsModule] = field(default_factory=dict)
    unparsed: dict[str, str] = field(default_factory=dict)

    def resolve(self, name: str) -> str | None:
        """Qualified name for ``name``, which may be bare if unambiguous."""
        if name in self.functions:
            return name
        matches = [q for q, info in self.functions.items() if info.name == name]
        return matches[0] if len(matches) == 1 else None

    def cc_map(self) -> dict[str, int]:
        return {q: info.cc for q, info in self.functions.items()}

    @property
    def cc_total(self) -> int:
        return sum(info.cc for info in self.functions.values())

    def files_defining(self, qualified: str) -> str | None:
        info = self.functions.get(qualified)
        return info.file if info else None

    def summary(self) -> dict:
        return {
            "modules": [m.model_dump(mode="json") for m in self.modules.values()],
            "dependency_edges": [
                {"source": s, "target": t, "kind": k} for s, t, k in sorted(self.edges)
            ],
        }

    def edge_models(self) -> list[DependencyEdge]:
        return [DependencyEdge(source=s, target=t, kind=k) for s, t, k in sorted(self.edges)]


def build_facts(files: dict[str, str]) -> CodeFacts:
    facts = CodeFacts()
    for index, path in enumerate(sorted(files)):
        try:
            module = parse_module(files[path], path)
        except (ParseError, LexError) as exc:
            log.warning("skipping %s: %s", path, exc)
            facts.unparsed[path] = str(exc)
            continue
        if module.name in facts.parsed:
            log.warning("module %s defined twice; keeping %s", module.name, facts.parsed[module.name].file)
            continue
        facts.parsed[module.name] = module
        names = []
        for fn in module.functions():
            cc = function_complexity(fn)
            if cc != decision_point_cc(fn):
                log.warning("CFG and decision-point counts disagree for %s.%s", module.name, fn.name)
            qualified = f"{module.name}.{fn.name}"
            facts.functions[qualified] = FunctionInfo(
                qualified, module.name, fn.name, path, (index, fn.span.start_line), cc
            )
            names.append(fn.name)
        facts.modules[module.name] = ModuleSummary(
            name=module.name, file=path, functions=names, imports=[i.module for i in module.imports]
        )
        facts.exports[module.name] = module.exports
    _link(facts)
    return facts


def _link(facts: CodeFacts) -> None:
    for name, module in facts.parsed.items():
        local = {fn.name for fn in module.functions()}
        visible: dict[str, str] = {}
        aliases: dict[str, str] = {}
        for imp in module.imports:
            if imp.module not in facts.modules:
                continue
            facts.edges.add((name, imp.module, "import"))
            aliases[imp.alias or imp.module] = imp.module
            aliases[imp.module] = imp.module
            if not imp.qualified:
                for fn in facts.modules[imp.module].functions:
                    visible.setdefault(fn, imp.module)
        for fn in module.functions():
            source = f"{name}.{fn.name}"
            for e in function_exprs(fn):
                if e.kind is not ExprKind.VAR:
                    continue
                target = _target(e.text, name, local, visible, aliases, facts)
                if target and target != source:
                    facts.edges.add((source, target, "call"))


def _target(text, module, local, visible, aliases, facts) -> str | None:
    if "." in text.strip("."):
        qual, _, bare = text.rpartition(".")
        mod = aliases.get(qual)
        if mod and bare in facts.modules[mod].functions:
            return f"{mod}.{bare}"
        return None
    if text in local:
        return f"{module}.{text}"
    if text in visible:
        return f"{visible[text]}.{text}"
    return None
