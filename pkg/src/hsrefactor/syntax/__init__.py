"""Lexing and parsing of a practical Haskell subset."""

from hsrefactor.syntax.ast import (
    Alt,
    ClassDecl,
    Clause,
    DataDecl,
    Declaration,
    Expr,
    ExprKind,
    FunctionDef,
    GuardedRhs,
    HsModule,
    Import,
    InstanceDecl,
    OtherDecl,
    Pattern,
    Stmt,
    StmtKind,
    TypeSignature,
    function_exprs,
    walk,
)
from hsrefactor.syntax.layout import LayoutError, resolve_layout
from hsrefactor.syntax.lexer import (
    LexError,
    SourceSpan,
    Token,
    TokenKind,
    UnterminatedBlockComment,
    UnterminatedString,
    tokenize,
    untokenize,
)
from hsrefactor.syntax.parser import (
    MalformedModuleHeader,
    ParseError,
    UnsupportedSource,
    extract_functions,
    parse_module,
)


def count_loc(source: str) -> int:
    """Number of lines holding at least one non-comment token."""
    try:
        tokens = tokenize(source)
    except LexError:
        return sum(1 for line in source.splitlines() if line.strip() and not line.strip().startswith("--"))
    lines: set[int] = set()
    for tok in tokens:
        if tok.kind is not TokenKind.COMMENT:
            lines.update(range(tok.span.start_line, tok.span.end_line + 1))
    return len(lines)


__all__ = [
    "Alt", "ClassDecl", "Clause", "DataDecl", "Declaration", "Expr", "ExprKind",
    "FunctionDef", "GuardedRhs", "HsModule", "Import", "InstanceDecl", "LayoutError",
    "LexError", "MalformedModuleHeader", "OtherDecl", "ParseError", "Pattern",
    "SourceSpan", "Stmt", "StmtKind", "Token", "TokenKind", "TypeSignature",
    "UnsupportedSource", "UnterminatedBlockComment", "UnterminatedString",
    "count_loc", "extract_functions", "function_exprs", "parse_module",
    "resolve_layout", "tokenize", "untokenize", "walk",
]
