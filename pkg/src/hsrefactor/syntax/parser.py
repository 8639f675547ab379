"""Recursive-descent parser for a practical Haskell subset.

Each top-level (and local) declaration is parsed on its own token slice; a
slice the parser does not understand becomes an ``OtherDecl`` carrying the
exact source text, so a module only fails as a whole when its header is
malformed or its layout is inconsistent.
"""

from __future__ import annotations

import logging
import re
from dataclasses import replace

from hsrefactor.errors import HsRefactorError
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
)
from hsrefactor.syntax.layout import LayoutError, check_indentation, resolve_layout
from hsrefactor.syntax.lexer import RESERVED_OPS, SourceSpan, Token, TokenKind, tokenize

log = logging.getLogger(__name__)

_CPP = re.compile(r"^[ \t]*#[ \t]*(if|ifdef|ifndef|elif|define|include)\b", re.M)

# binding power and associativity of the operators with conventional fixity;
# every other operator is left-associative at DEFAULT_PREC
FIXITY = {"$": (0, "right"), "||": (2, "right"), "&&": (3, "right"), ".": (9, "right")}
DEFAULT_PREC = 5

_EXPR_STOP_KEYWORDS = frozenset({"then", "else", "of", "in", "where"})


class ParseError(HsRefactorError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(f"{span}: {message}" if span else message)
        self.span = span


class MalformedModuleHeader(ParseError):
    pass


class UnsupportedSource(HsRefactorError):
    """Source that uses features deliberately left out (CPP)."""


_EOF_SPAN = SourceSpan(1, 1, 1, 1)


class _Parser:
    def __init__(self, toks: list[Token], source: str, file: str, pos: int = 0,
                 limit: int | None = None, lines: list[str] | None = None):
        self.toks = toks
        self.source = source
        self.file = file
        self.lines = source.split("\n") if lines is None else lines
        self.pos = pos
        self.limit = len(toks) if limit is None else limit
        self.last: Token | None = None

    # token access -------------------------------------------------------

    def peek(self, k: int = 0) -> Token | None:
        i = self.pos + k
        return self.toks[i] if i < self.limit else None

    def at(self, kind: TokenKind, text: str | None = None, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok is not None and tok.is_(kind, text)

    def at_kw(self, text: str) -> bool:
        return self.at(TokenKind.KEYWORD, text)

    def at_op(self, text: str) -> bool:
        return self.at(TokenKind.OPERATOR, text)

    def at_special(self, text: str) -> bool:
        return self.at(TokenKind.SPECIAL, text)

    def at_brace(self, text: str) -> bool:
        return self.at(TokenKind.LAYOUT_BRACE, text)

    def advance(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self._here())
        self.pos += 1
        if not tok.virtual:
            self.last = tok
        return tok

    def expect(self, kind: TokenKind, text: str) -> Token:
        if not self.at(kind, text):
            raise ParseError(f"expected {text!r}", self._here())
        return self.advance()

    def _here(self) -> SourceSpan:
        tok = self.peek()
        if tok is not None:
            return tok.span
        return self.last.span if self.last else _EOF_SPAN

    def done(self) -> bool:
        return self.pos >= self.limit

    def span_from(self, start: Token) -> SourceSpan:
        end = self.last if self.last is not None else start
        if (end.span.end_line, end.span.end_col) < (start.span.start_line, start.span.start_col):
            end = start
        return SourceSpan(start.span.start_line, start.span.start_col, end.span.end_line, end.span.end_col, self.file)

    def first_real(self) -> Token:
        i = self.pos
        while i < self.limit and self.toks[i].virtual:
            i += 1
        if i >= self.limit:
            raise ParseError("expected a token", self._here())
        return self.toks[i]

    def text_between(self, start: int, end: int) -> str:
        real = [t for t in self.toks[start:end] if not t.virtual]
        if not real:
            return ""
        return self.source[real[0].offset:real[-1].end_offset]

    def sub(self, start: int, end: int) -> _Parser:
        return _Parser(self.toks, self.source, self.file, start, end, self.lines)

    # scanning helpers ---------------------------------------------------

    def scan_depth0(self, stops, start: int | None = None) -> int:
        """Index of the first depth-0 token matching ``stops`` (or the limit)."""
        depth = 0
        i = self.pos if start is None else start
        while i < self.limit:
            tok = self.toks[i]
            if depth == 0 and stops(tok):
                return i
            if tok.text in ("(", "[", "{") and tok.kind in (TokenKind.SPECIAL, TokenKind.LAYOUT_BRACE):
                depth += 1
            elif tok.text in (")", "]", "}") and tok.kind in (TokenKind.SPECIAL, TokenKind.LAYOUT_BRACE):
                depth -= 1
                if depth < 0:
                    return i
            i += 1
        return self.limit

    def skip_balanced(self) -> None:
        """Consume one bracketed group starting at the current token."""
        depth = 0
        while True:
            tok = self.advance()
            if tok.text in ("(", "[", "{") and tok.kind in (TokenKind.SPECIAL, TokenKind.LAYOUT_BRACE):
                depth += 1
            elif tok.text in (")", "]", "}") and tok.kind in (TokenKind.SPECIAL, TokenKind.LAYOUT_BRACE):
                depth -= 1
            if depth <= 0:
                return

    def block_items(self) -> list[tuple[int, int]]:
        """Split a ``{ item ; item }`` block into token ranges; consumes it."""
        self.expect(TokenKind.LAYOUT_BRACE, "{")
        items = []
        while True:
            end = self.scan_depth0(lambda t: t.kind is TokenKind.LAYOUT_BRACE and t.text in ";}")
            if end >= self.limit:
                raise ParseError("unterminated block", self._here())
            real = [t for t in self.toks[self.pos:end] if not t.virtual]
            if real:
                items.append((self.pos, end))
                self.last = real[-1]
            self.pos = end
            closer = self.advance()
            if closer.text == "}":
                return items

    # declarations -------------------------------------------------------

    def decl_block(self) -> tuple[Declaration, ...]:
        raw = [self.sub(a, b).declaration_item() for a, b in self.block_items()]
        return group_clauses(raw, self.lines)

    def declaration_item(self):
        """Parse the whole slice as one declaration (or one clause)."""
        start = self.pos
        try:
            result = self._declaration()
            if not self.done():
                raise ParseError("unexpected trailing tokens", self._here())
            return result
        except ParseError as exc:
            self.pos = start
            first = self.first_real()
            while not self.done():
                self.advance()
            return OtherDecl(self.text_between(start, self.limit), self.span_from(first), reason=str(exc))

    def _declaration(self):
        tok = self.first_real()
        if tok.kind is TokenKind.KEYWORD:
            if tok.text == "import":
                return self._import()
            if tok.text in ("data", "newtype"):
                return self._data()
            if tok.text == "class":
                return self._class_or_instance(is_class=True)
            if tok.text == "instance":
                return self._class_or_instance(is_class=False)
            raise ParseError(f"unsupported declaration '{tok.text}'", tok.span)
        sig_at = self.scan_depth0(lambda t: t.kind is TokenKind.OPERATOR and t.text in ("::", "=", "|"))
        if sig_at < self.limit and self.toks[sig_at].text == "::":
            return self._signature(sig_at)
        return self._clause_decl()

    def _import(self) -> Import:
        start = self.expect(TokenKind.KEYWORD, "import")
        qualified = False
        if self.at(TokenKind.IDENTIFIER, "qualified"):
            self.advance()
            qualified = True
        if self.at(TokenKind.LITERAL):  # package import
            self.advance()
        name = self.advance()
        if name.kind is not TokenKind.IDENTIFIER or not name.text[:1].isupper():
            raise ParseError("expected a module name", name.span)
        if self.at(TokenKind.IDENTIFIER, "qualified"):
            self.advance()
            qualified = True
        alias = None
        if self.at(TokenKind.IDENTIFIER, "as"):
            self.advance()
            alias = self.advance().text
        while not self.done():
            self.advance()  # hiding / import lists
        return Import(name.text, self.span_from(start), qualified, alias)

    def _data(self) -> DataDecl:
        start = self.pos
        first = self.advance()
        eq = self.scan_depth0(lambda t: t.is_(TokenKind.OPERATOR, "=") or t.is_(TokenKind.KEYWORD, "where"))
        head = [t for t in self.toks[self.pos:eq] if not t.virtual]
        arrow = next((i for i, t in enumerate(head) if t.text == "=>"), None)
        if arrow is not None:
            head = head[arrow + 1:]
        cons = [t for t in head if t.kind is TokenKind.IDENTIFIER and t.text[:1].isupper()]
        if not cons:
            raise ParseError("data declaration without a type name", first.span)
        constructors = []
        if eq < self.limit and self.toks[eq].text == "=":
            self.pos = eq + 1
            expect_con = True
            depth = 0
            while not self.done():
                tok = self.advance()
                if tok.text in "([{" and tok.kind is not TokenKind.OPERATOR:
                    depth += 1
                elif tok.text in ")]}" and tok.kind is not TokenKind.OPERATOR:
                    depth -= 1
                elif depth == 0 and tok.is_(TokenKind.OPERATOR, "|"):
                    expect_con = True
                elif depth == 0 and tok.is_(TokenKind.KEYWORD, "deriving"):
                    expect_con = False
                elif expect_con and tok.kind is TokenKind.IDENTIFIER:
                    constructors.append(tok.text)
                    expect_con = False
        while not self.done():
            self.advance()
        return DataDecl(cons[0].text, tuple(constructors), self.text_between(start, self.limit),
                        self.span_from(first), keyword=first.text)

    def _class_or_instance(self, is_class: bool):
        start = self.pos
        first = self.advance()
        where = self.scan_depth0(lambda t: t.is_(TokenKind.KEYWORD, "where"))
        head_tokens = [t for t in self.toks[self.pos:where] if not t.virtual]
        arrow = next((i for i, t in enumerate(head_tokens) if t.text == "=>"), None)
        if arrow is not None:
            head_tokens = head_tokens[arrow + 1:]
        names = [t for t in head_tokens if t.kind is TokenKind.IDENTIFIER and t.text[:1].isupper()]
        if not names:
            raise ParseError("missing class name", first.span)
        self.pos = where
        decls: tuple[Declaration, ...] = ()
        if where < self.limit:
            self.advance()
            decls = self.decl_block()
        text = self.text_between(start, self.limit)
        span = self.span_from(first)
        if is_class:
            return ClassDecl(names[0].text, text, span, decls)
        rest = head_tokens[head_tokens.index(names[0]) + 1:]
        type_text = self.source[rest[0].offset:rest[-1].end_offset] if rest else ""
        return InstanceDecl(names[0].text, type_text, text, span, decls)

    def _signature(self, colons: int) -> TypeSignature:
        first = self.first_real()
        names = []
        while self.pos < colons:
            tok = self.advance()
            if tok.kind is TokenKind.IDENTIFIER and tok.text[:1].islower() or tok.text[:1] == "_":
                names.append(tok.text)
            elif tok.is_(TokenKind.SPECIAL, "("):
                op = self.advance()
                if op.kind is not TokenKind.OPERATOR:
                    raise ParseError("expected an operator name", op.span)
                names.append(op.text)
                self.expect(TokenKind.SPECIAL, ")")
            elif tok.is_(TokenKind.SPECIAL, ","):
                continue
            elif not tok.virtual:
                raise ParseError("not a type signature", tok.span)
        self.advance()
        if not names or self.done():
            raise ParseError("empty type signature", first.span)
        type_text = self.text_between(self.pos, self.limit)
        while not self.done():
            self.advance()
        return TypeSignature(tuple(names), type_text, self.span_from(first))

    def _clause_decl(self) -> tuple[str, Clause]:
        first = self.first_real()
        rhs_at = self.scan_depth0(lambda t: t.kind is TokenKind.OPERATOR and t.text in ("=", "|"))
        if rhs_at >= self.limit:
            raise ParseError("binding without '=' or guards", first.span)
        name, patterns = self._lhs(rhs_at)
        clause = self._rhs(first, patterns, "=")
        return name, clause

    def _lhs(self, rhs_at: int) -> tuple[str, list[Pattern]]:
        lhs = [t for t in self.toks[self.pos:rhs_at] if not t.virtual]
        if not lhs:
            raise ParseError("missing left-hand side", self._here())
        op_at = _infix_lhs_operator(lhs)
        if op_at is not None:
            left = self.sub(self.pos, rhs_at)
            lpat = left.apat()
            op = left.advance()
            if op.is_(TokenKind.SPECIAL, "`"):
                op = left.advance()
                left.expect(TokenKind.SPECIAL, "`")
            rpat = left.apat()
            if not left.done():
                raise ParseError("unsupported infix left-hand side", left._here())
            self.pos = rhs_at
            return op.text, [lpat, rpat]
        head = self.advance()
        if head.is_(TokenKind.SPECIAL, "("):
            op = self.advance()
            if op.kind is not TokenKind.OPERATOR or op.text in RESERVED_OPS:
                raise ParseError("pattern bindings are not supported", head.span)
            self.expect(TokenKind.SPECIAL, ")")
            name = op.text
        elif head.kind is TokenKind.IDENTIFIER and (head.text[:1].islower() or head.text[:1] == "_") and "." not in head.text:
            name = head.text
        else:
            raise ParseError("pattern bindings are not supported", head.span)
        patterns = []
        while self.pos < rhs_at:
            patterns.append(self.apat())
        if self.pos != rhs_at:
            raise ParseError("malformed patterns", self._here())
        return name, patterns

    def _rhs(self, first: Token, patterns, equals: str) -> Clause:
        guards: list[GuardedRhs] = []
        body = None
        if self.at_op("|"):
            while self.at_op("|"):
                gstart = self.advance()
                guard = self.qualifiers_as_guard(equals)
                self.expect(TokenKind.OPERATOR, equals)
                rhs = self.expr()
                guards.append(GuardedRhs(guard, rhs, self.span_from(gstart)))
                self._skip_virtual_semicolon_before("|")
        else:
            self.expect(TokenKind.OPERATOR, equals)
            body = self.expr()
        where: tuple[Declaration, ...] = ()
        self._skip_virtual_semicolon_before("where")
        if self.at_kw("where"):
            self.advance()
            where = self.decl_block()
        return Clause(tuple(patterns), self.span_from(first), body, tuple(guards), where)

    def _skip_virtual_semicolon_before(self, text: str) -> None:
        tok = self.peek()
        nxt = self.peek(1)
        if tok is not None and tok.virtual and tok.text == ";" and nxt is not None and nxt.text == text:
            self.advance()

    # patterns -----------------------------------------------------------

    def apat(self) -> Pattern:
        start_pos = self.pos
        first = self.advance()
        if first.is_(TokenKind.OPERATOR, "~") or first.is_(TokenKind.OPERATOR, "!"):
            inner = self.apat()
            return Pattern(self.text_between(start_pos, self.pos), self.span_from(first), inner.binders)
        if first.kind is TokenKind.SPECIAL and first.text in "([":
            self.pos -= 1
            self.skip_balanced()
        elif first.kind is TokenKind.IDENTIFIER:
            if first.text[:1].isupper() and self.at_brace("{") and not self.peek().virtual:
                self.skip_balanced()
            elif self.at_op("@"):
                self.advance()
                self.apat()
        elif first.kind is TokenKind.LITERAL or first.is_(TokenKind.KEYWORD, "_"):
            pass
        else:
            raise ParseError(f"unexpected {first.text!r} in pattern", first.span)
        return self._pattern(start_pos, first)

    def _pattern(self, start_pos: int, first: Token) -> Pattern:
        binders = tuple(
            t.text for t in self.toks[start_pos:self.pos]
            if t.kind is TokenKind.IDENTIFIER and (t.text[:1].islower() or t.text[:1] == "_")
        )
        return Pattern(self.text_between(start_pos, self.pos), self.span_from(first), binders)

    def pattern_until(self, end: int) -> Pattern:
        if end <= self.pos:
            raise ParseError("missing pattern", self._here())
        start_pos = self.pos
        first = self.first_real()
        while self.pos < end:
            self.advance()
        return self._pattern(start_pos, first)

    # expressions --------------------------------------------------------

    def expr(self) -> Expr:
        e = self.infix_expr(0)
        if self.at_op("::"):
            self.advance()
            stop = self.scan_depth0(_annotation_stop)
            while self.pos < stop:
                self.advance()
            e = Expr(ExprKind.OTHER, self.span_from_span(e.span), (e,), text="::")
        return e

    def span_from_span(self, start: SourceSpan) -> SourceSpan:
        end = self.last.span if self.last else start
        return SourceSpan(start.start_line, start.start_col, end.end_line, end.end_col, self.file)

    def peek_operator(self) -> tuple[str, int] | None:
        """The infix operator at the cursor and its token length, if any."""
        tok = self.peek()
        if tok is None:
            return None
        if tok.kind is TokenKind.OPERATOR and (tok.text not in RESERVED_OPS or tok.text == ":"):
            return tok.text, 1
        if tok.is_(TokenKind.SPECIAL, "`") and self.at(TokenKind.IDENTIFIER, k=1) and self.at(TokenKind.SPECIAL, "`", k=2):
            return self.peek(1).text, 3
        return None

    def infix_expr(self, min_prec: int) -> Expr:
        lhs = self.operand()
        while True:
            found = self.peek_operator()
            if found is None:
                return lhs
            op, width = found
            after = self.peek(width)
            if after is not None and after.is_(TokenKind.SPECIAL, ")"):
                return lhs  # left section, handled by the paren parser
            prec, assoc = FIXITY.get(op, (DEFAULT_PREC, "left"))
            if prec < min_prec:
                return lhs
            for _ in range(width):
                self.advance()
            rhs = self.infix_expr(prec + 1 if assoc == "left" else prec)
            lhs = Expr(ExprKind.INFIX, lhs.span.cover(rhs.span), (lhs, rhs), text=op)

    def operand(self) -> Expr:
        tok = self.peek()
        if tok is not None and tok.is_(TokenKind.OPERATOR, "-"):
            first = self.advance()
            inner = self.application()
            return Expr(ExprKind.OTHER, self.span_from(first), (inner,), text="negate")
        return self.application()

    def _block_expr(self) -> Expr | None:
        tok = self.peek()
        if tok is None:
            return None
        if tok.is_(TokenKind.OPERATOR, "\\"):
            return self.lambda_expr()
        if tok.kind is TokenKind.KEYWORD:
            if tok.text == "if":
                return self.if_expr()
            if tok.text == "case":
                return self.case_expr()
            if tok.text == "let":
                return self.let_expr()
            if tok.text == "do":
                return self.do_expr()
        return None

    def application(self) -> Expr:
        block = self._block_expr()
        if block is not None:
            return block
        first = self.first_real()
        parts = [self.aexp()]
        while True:
            block = self._block_expr()
            if block is not None:
                parts.append(block)  # block argument, extends to the right
                break
            if not self._starts_aexp():
                break
            parts.append(self.aexp())
        if len(parts) == 1:
            return parts[0]
        return Expr(ExprKind.APP, self.span_from(first), tuple(parts))

    def _starts_aexp(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind in (TokenKind.IDENTIFIER, TokenKind.LITERAL):
            return True
        return tok.kind is TokenKind.SPECIAL and tok.text in "(["

    def aexp(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError("expected an expression", self._here())
        if tok.kind is TokenKind.IDENTIFIER:
            self.advance()
            e = Expr(ExprKind.VAR, self.span_from(tok), text=tok.text)
        elif tok.kind is TokenKind.LITERAL:
            self.advance()
            e = Expr(ExprKind.LIT, self.span_from(tok), text=tok.text)
        elif tok.is_(TokenKind.SPECIAL, "("):
            e = self._guarded_group(self.paren_expr)
        elif tok.is_(TokenKind.SPECIAL, "["):
            e = self._guarded_group(self.bracket_expr)
        else:
            raise ParseError(f"unexpected {tok.text!r} in expression", tok.span)
        while self.at_brace("{") and not self.peek().virtual:
            self.skip_balanced()
            e = Expr(ExprKind.OTHER, self.span_from_span(e.span), (e,), text="record")
        return e

    def _guarded_group(self, parse) -> Expr:
        """Parse a bracketed group, falling back to an opaque node."""
        start = self.pos
        try:
            return parse()
        except ParseError:
            self.pos = start
            first = self.advance()
            self.pos = start
            self.skip_balanced()
            return Expr(ExprKind.OTHER, self.span_from(first), text=self.text_between(start, self.pos))

    def paren_expr(self) -> Expr:
        first = self.expect(TokenKind.SPECIAL, "(")
        if self.at_special(")"):
            self.advance()
            return Expr(ExprKind.OTHER, self.span_from(first), text="()")
        found = self.peek_operator()
        if found is not None:
            op, width = found
            after = self.peek(width)
            if after is not None and after.is_(TokenKind.SPECIAL, ")"):
                for _ in range(width + 1):
                    self.advance()
                return Expr(ExprKind.VAR, self.span_from(first), text=op)
            if op != "-":
                for _ in range(width):
                    self.advance()
                arg = self.expr()
                self.expect(TokenKind.SPECIAL, ")")
                return Expr(ExprKind.SECTION, self.span_from(first), (arg,), text=op)
        inner = self.expr()
        found = self.peek_operator()
        if found is not None:
            op, width = found
            for _ in range(width):
                self.advance()
            self.expect(TokenKind.SPECIAL, ")")
            return Expr(ExprKind.SECTION, self.span_from(first), (inner,), text=op)
        if self.at_special(","):
            items = [inner]
            while self.at_special(","):
                self.advance()
                items.append(self.expr())
            self.expect(TokenKind.SPECIAL, ")")
            return Expr(ExprKind.OTHER, self.span_from(first), tuple(items), text="tuple")
        self.expect(TokenKind.SPECIAL, ")")
        return Expr(ExprKind.PAREN, self.span_from(first), (inner,))

    def bracket_expr(self) -> Expr:
        first = self.expect(TokenKind.SPECIAL, "[")
        if self.at_special("]"):
            self.advance()
            return Expr(ExprKind.OTHER, self.span_from(first), text="[]")
        head = self.expr()
        if self.at_op("|"):
            self.advance()
            quals = [self.qualifier()]
            while self.at_special(","):
                self.advance()
                quals.append(self.qualifier())
            self.expect(TokenKind.SPECIAL, "]")
            return Expr(ExprKind.LIST_COMP, self.span_from(first), (head,), stmts=tuple(quals))
        items = [head]
        kind = "list"
        while self.at_special(","):
            self.advance()
            items.append(self.expr())
        if self.at_op(".."):
            self.advance()
            kind = "enum"
            if not self.at_special("]"):
                items.append(self.expr())
        self.expect(TokenKind.SPECIAL, "]")
        return Expr(ExprKind.OTHER, self.span_from(first), tuple(items), text=kind)

    def qualifier(self) -> Stmt:
        """Generator, guard or let inside a comprehension or pattern guard."""
        first = self.first_real()
        if self.at_kw("let"):
            self.advance()
            decls = self.decl_block()
            if self.at_kw("in"):
                raise ParseError("let-expression used as a qualifier", first.span)
            return Stmt(StmtKind.LET, self.span_from(first), decls=decls)
        arrow = self.scan_depth0(
            lambda t: t.is_(TokenKind.OPERATOR, "<-") or t.is_(TokenKind.SPECIAL, ",")
            or (t.kind is TokenKind.OPERATOR and t.text in ("=", "->", "|"))
            or t.kind is TokenKind.LAYOUT_BRACE
        )
        if arrow < self.limit and self.toks[arrow].is_(TokenKind.OPERATOR, "<-"):
            pat = self.pattern_until(arrow)
            self.advance()
            e = self.expr()
            return Stmt(StmtKind.BIND, self.span_from(first), e, pat)
        e = self.expr()
        return Stmt(StmtKind.EXPR, e.span, e)

    def qualifiers_as_guard(self, equals: str) -> Expr:
        first = self.first_real()
        quals = [self.qualifier()]
        while self.at_special(","):
            self.advance()
            quals.append(self.qualifier())
        if len(quals) == 1 and quals[0].kind is StmtKind.EXPR:
            return quals[0].expr
        children = []
        for q in quals:
            if q.expr is not None:
                children.append(q.expr)
            else:
                children.append(Expr(ExprKind.LET, q.span, decls=q.decls))
        return Expr(ExprKind.OTHER, self.span_from(first), tuple(children), text=",")

    def lambda_expr(self) -> Expr:
        first = self.expect(TokenKind.OPERATOR, "\\")
        patterns = []
        while not self.at_op("->"):
            patterns.append(self.apat())
        if not patterns:
            raise ParseError("lambda without patterns", first.span)
        self.advance()
        body = self.expr()
        return Expr(ExprKind.LAMBDA, self.span_from(first), (body,), patterns=tuple(patterns))

    def if_expr(self) -> Expr:
        first = self.expect(TokenKind.KEYWORD, "if")
        cond = self.expr()
        self._skip_semicolon_before("then")
        self.expect(TokenKind.KEYWORD, "then")
        then = self.expr()
        self._skip_semicolon_before("else")
        self.expect(TokenKind.KEYWORD, "else")
        other = self.expr()
        return Expr(ExprKind.IF, self.span_from(first), (cond, then, other))

    def _skip_semicolon_before(self, keyword: str) -> None:
        if self.at_brace(";") and self.at(TokenKind.KEYWORD, keyword, k=1):
            self.advance()

    def case_expr(self) -> Expr:
        first = self.expect(TokenKind.KEYWORD, "case")
        scrutinee = self.expr()
        self.expect(TokenKind.KEYWORD, "of")
        alts = tuple(self.sub(a, b).alternative() for a, b in self.block_items())
        if not alts:
            raise ParseError("case without alternatives", first.span)
        return Expr(ExprKind.CASE, self.span_from(first), (scrutinee,), alts=alts)

    def alternative(self) -> Alt:
        first = self.first_real()
        split = self.scan_depth0(lambda t: t.kind is TokenKind.OPERATOR and t.text in ("->", "|"))
        pattern = self.pattern_until(split)
        clause = self._rhs(first, [], "->")
        if not self.done():
            raise ParseError("unexpected tokens after alternative", self._here())
        return Alt(pattern, clause.span, clause.body, clause.guards, clause.where)

    def let_expr(self) -> Expr:
        first = self.expect(TokenKind.KEYWORD, "let")
        decls = self.decl_block()
        self.expect(TokenKind.KEYWORD, "in")
        body = self.expr()
        return Expr(ExprKind.LET, self.span_from(first), (body,), decls=decls)

    def do_expr(self) -> Expr:
        first = self.expect(TokenKind.KEYWORD, "do")
        stmts = tuple(self.sub(a, b).statement() for a, b in self.block_items())
        if not stmts:
            raise ParseError("empty do block", first.span)
        return Expr(ExprKind.DO, self.span_from(first), stmts=stmts)

    def statement(self) -> Stmt:
        first = self.first_real()
        if self.at_kw("let"):
            save = self.pos
            self.advance()
            decls = self.decl_block()
            if not self.at_kw("in"):
                if not self.done():
                    raise ParseError("unexpected tokens after let", self._here())
                return Stmt(StmtKind.LET, self.span_from(first), decls=decls)
            self.pos = save
        arrow = self.scan_depth0(lambda t: t.is_(TokenKind.OPERATOR, "<-"))
        if arrow < self.limit:
            pat = self.pattern_until(arrow)
            self.advance()
            e = self.expr()
            stmt = Stmt(StmtKind.BIND, self.span_from(first), e, pat)
        else:
            e = self.expr()
            stmt = Stmt(StmtKind.EXPR, e.span, e)
        if not self.done():
            raise ParseError("unexpected tokens in statement", self._here())
        return stmt


def _annotation_stop(tok: Token) -> bool:
    if tok.kind is TokenKind.LAYOUT_BRACE:
        return True
    if tok.kind is TokenKind.SPECIAL and tok.text in ",)]":
        return True
    if tok.kind is TokenKind.OPERATOR and tok.text in ("=", "|", "<-"):
        return True
    return tok.kind is TokenKind.KEYWORD and tok.text in _EXPR_STOP_KEYWORDS


def _infix_lhs_operator(lhs: list[Token]) -> int | None:
    """Position of the defined operator in ``x <+> y`` / ``x `op` y`` forms."""
    depth = 0
    for i, tok in enumerate(lhs):
        if tok.kind is TokenKind.SPECIAL and tok.text in "([":
            depth += 1
        elif tok.kind is TokenKind.SPECIAL and tok.text in ")]":
            depth -= 1
        elif depth == 0 and i > 0:
            if tok.kind is TokenKind.OPERATOR and tok.text not in RESERVED_OPS and not tok.text.startswith(":"):
                if tok.text in ("!", "~") and i + 1 < len(lhs) and lhs[i + 1].span.start == tok.span.end:
                    continue  # bang / lazy pattern glued to its operand
                return i
            if tok.is_(TokenKind.SPECIAL, "`"):
                return i
    return None


def group_clauses(raw, lines: list[str]) -> tuple[Declaration, ...]:
    """Merge adjacent clauses of one function into a ``FunctionDef``."""
    out: list = []
    seen: set[str] = set()
    current: list | None = None  # [name, [clauses]]

    def flush():
        nonlocal current
        if current is not None:
            name, clauses = current
            span = clauses[0].span.cover(clauses[-1].span)
            out.append(FunctionDef(name, tuple(clauses), span))
            seen.add(name)
            current = None

    for item in raw:
        if isinstance(item, tuple):
            name, clause = item
            if current is not None and current[0] == name:
                if clause.arity != current[1][0].arity:
                    out.append(OtherDecl(_slice_lines(lines, clause.span), clause.span,
                                         reason=f"arity mismatch in {name}"))
                    continue
                current[1].append(clause)
                continue
            flush()
            if name in seen:
                out.append(OtherDecl(_slice_lines(lines, clause.span), clause.span,
                                     reason=f"non-adjacent clause of {name}"))
                continue
            current = [name, [clause]]
        else:
            flush()
            out.append(item)
    flush()
    return tuple(out)


def _slice_lines(lines: list[str], span: SourceSpan) -> str:
    if span.start_line == span.end_line:
        return lines[span.start_line - 1][span.start_col - 1:span.end_col - 1]
    parts = [lines[span.start_line - 1][span.start_col - 1:]]
    parts.extend(lines[span.start_line:span.end_line - 1])
    parts.append(lines[span.end_line - 1][:span.end_col - 1])
    return "\n".join(parts)


def check_supported(source: str, file: str = "") -> None:
    if _CPP.search(source):
        raise UnsupportedSource(f"{file or '<source>'}: CPP directives are not supported")


def parse_module(source: str, file: str = "") -> HsModule:
    """Parse a whole module; unknown declarations become ``OtherDecl``."""
    check_supported(source, file)
    tokens = [t for t in tokenize(source, file) if t.kind is not TokenKind.COMMENT]
    lines = source.split("\n")
    check_indentation(tokens, lines)
    has_header = bool(tokens) and tokens[0].is_(TokenKind.KEYWORD, "module")
    resolved = resolve_layout(tokens, implicit_top=not has_header)
    p = _Parser(resolved, source, file, lines=lines)
    name = "Main"
    exports = None
    if has_header:
        name, exports = _module_header(p)
    if p.done():
        return HsModule(name, exports=exports, file=file)
    items = p.block_items()
    if not p.done():
        raise LayoutError("declaration indented less than the module body", p.first_real().span)
    imports = []
    raw = []
    for a, b in items:
        item = p.sub(a, b).declaration_item()
        if isinstance(item, Import):
            imports.append(item)
        else:
            raw.append(item)
    decls = _attach_signatures(group_clauses(raw, lines))
    return HsModule(name, tuple(imports), decls, exports, file, items=len(items))


def _module_header(p: _Parser) -> tuple[str, tuple[str, ...] | None]:
    start = p.advance()
    name_tok = p.peek()
    if name_tok is None or name_tok.kind is not TokenKind.IDENTIFIER or not name_tok.text[:1].isupper():
        raise MalformedModuleHeader("expected a module name after 'module'", start.span)
    p.advance()
    exports = None
    if p.at_special("("):
        open_at = p.pos
        try:
            p.skip_balanced()
        except ParseError as exc:
            raise MalformedModuleHeader("unterminated export list", start.span) from exc
        exports = _export_names(p.toks[open_at + 1:p.pos - 1])
    if not p.at_kw("where"):
        raise MalformedModuleHeader("expected 'where' after the module name", p._here())
    p.advance()
    return name_tok.text, exports


def _export_names(toks: list[Token]) -> tuple[str, ...]:
    names = []
    depth = 0
    prev = None
    for tok in toks:
        if tok.kind is TokenKind.SPECIAL and tok.text == "(":
            depth += 1
        elif tok.kind is TokenKind.SPECIAL and tok.text == ")":
            depth -= 1
        elif tok.kind is TokenKind.IDENTIFIER and depth == 0 and not (prev and prev.text == "module"):
            names.append(tok.text)
        elif tok.kind is TokenKind.OPERATOR and depth == 1 and prev is not None and prev.text == "(" and tok.text != "..":
            names.append(tok.text)
        prev = tok
    return tuple(names)


def _attach_signatures(decls: tuple[Declaration, ...]) -> tuple[Declaration, ...]:
    sigs: dict[str, TypeSignature] = {}
    for d in decls:
        if isinstance(d, TypeSignature):
            for n in d.names:
                sigs.setdefault(n, d)
    return tuple(
        replace(d, signature=sigs.get(d.name)) if isinstance(d, FunctionDef) else d for d in decls
    )


def extract_functions(module: HsModule) -> list[FunctionDef]:
    """Top-level functions in source order, with matching signatures attached."""
    return [d for d in _attach_signatures(module.declarations) if isinstance(d, FunctionDef)]
