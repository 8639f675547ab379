"""Offside-rule resolution.

Turns the comment-free token stream into one with explicit ``{ ; }``
(virtual tokens are flagged ``virtual=True``). Implicit blocks open after
``where``, ``let``, ``do`` and ``of`` and at the top level. The parse-error(t)
clause of the Haskell report is approximated by closing implicit blocks on
``in``, closing brackets, ``then``/``else``/``of`` and commas.
"""

from __future__ import annotations

from dataclasses import dataclass

from hsrefactor.syntax.lexer import LexError, SourceSpan, Token, TokenKind

LAYOUT_KEYWORDS = frozenset({"where", "let", "do", "of"})


class LayoutError(LexError):
    """Indentation that cannot be resolved deterministically."""


@dataclass
class _Ctx:
    kind: str  # "layout" | "explicit" | "bracket" | "if" | "case"
    col: int = 0
    opener: str = ""


def _virtual(text: str, at: SourceSpan) -> Token:
    span = SourceSpan(at.start_line, at.start_col, at.start_line, at.start_col, at.file)
    return Token(TokenKind.LAYOUT_BRACE, text, span, virtual=True)


def check_indentation(tokens: list[Token], lines: list[str]) -> None:
    """Reject files that indent with both tabs and spaces."""
    seen: dict[str, Token] = {}
    prev_line = 0
    for tok in tokens:
        if tok.span.start_line != prev_line:
            line = lines[tok.span.start_line - 1] if tok.span.start_line <= len(lines) else ""
            indent = line[: tok.span.start_col - 1]
            if indent and not indent.strip():
                for ch in set(indent):
                    seen.setdefault(ch, tok)
                if "\t" in seen and " " in seen:
                    raise LayoutError("mixed tab and space indentation", tok.span)
        prev_line = tok.span.end_line


class _Resolver:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.out: list[Token] = []
        self.stack: list[_Ctx] = []

    def _effective(self) -> int:
        """Index of the topmost non-marker context, or -1."""
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].kind not in ("if", "case"):
                return i
        return -1

    def _close_top_layout(self, at: SourceSpan) -> None:
        i = self._effective()
        del self.stack[i:]
        self.out.append(_virtual("}", at))

    def _enclosing_col(self) -> int:
        i = self._effective()
        if i < 0:
            return 0
        ctx = self.stack[i]
        return ctx.col if ctx.kind == "layout" else 0

    def _close_until_marker(self, marker: str, at: SourceSpan, pop_marker: bool) -> None:
        for i in range(len(self.stack) - 1, -1, -1):
            kind = self.stack[i].kind
            if kind == marker:
                break
            if kind in ("bracket", "explicit"):
                return
        else:
            return
        while self.stack[-1].kind != marker:
            if self.stack[-1].kind == "layout":
                self.out.append(_virtual("}", at))
            self.stack.pop()
        if pop_marker:
            self.stack.pop()

    def _close_bracket(self, tok: Token) -> None:
        while self.stack:
            ctx = self.stack.pop()
            if ctx.kind == "layout":
                self.out.append(_virtual("}", tok.span))
            elif ctx.kind in ("bracket", "explicit"):
                return

    def _close_for_comma(self, tok: Token) -> None:
        while True:
            i = self._effective()
            if i < 0 or self.stack[i].kind != "layout":
                return
            has_bracket_below = any(c.kind in ("bracket", "explicit") for c in self.stack[:i])
            if self.stack[i].opener != "let" and not has_bracket_below:
                return
            self._close_top_layout(tok.span)

    def _close_for_in(self, tok: Token) -> None:
        for i in range(len(self.stack) - 1, -1, -1):
            ctx = self.stack[i]
            if ctx.kind in ("bracket", "explicit"):
                return
            if ctx.kind == "layout" and ctx.opener == "let":
                break
        else:
            return
        while True:
            i = self._effective()
            opener = self.stack[i].opener
            self._close_top_layout(tok.span)
            if opener == "let":
                return

    def _newline(self, tok: Token) -> None:
        col = tok.span.start_col
        while True:
            i = self._effective()
            if i < 0 or self.stack[i].kind != "layout":
                return
            m = self.stack[i].col
            if col < m:
                self._close_top_layout(tok.span)
                continue
            if col == m:
                if tok.is_(TokenKind.KEYWORD, "where") and self.stack[i].opener in ("of", "do", "let"):
                    # a where aligned with alternatives/statements belongs to the equation
                    self._close_top_layout(tok.span)
                    continue
                self.out.append(_virtual(";", tok.span))
            return

    def run(self, implicit_top: bool) -> list[Token]:
        toks = self.tokens
        pending: str | None = None
        if implicit_top and toks and not toks[0].is_(TokenKind.LAYOUT_BRACE, "{"):
            pending = "<top>"
        prev_line = toks[0].span.start_line if toks else 0
        for tok in toks:
            first_on_line = tok.span.start_line > prev_line
            prev_line = tok.span.end_line
            if pending is not None:
                opener, pending = pending, None
                if tok.is_(TokenKind.LAYOUT_BRACE, "{"):
                    self.stack.append(_Ctx("explicit", opener=opener))
                    self.out.append(tok)
                    continue
                n = tok.span.start_col
                if n > self._enclosing_col():
                    self.stack.append(_Ctx("layout", n, opener))
                    self.out.append(_virtual("{", tok.span))
                    first_on_line = False
                else:
                    self.out.append(_virtual("{", tok.span))
                    self.out.append(_virtual("}", tok.span))
            if first_on_line:
                self._newline(tok)
            self._emit(tok)
            if tok.kind is TokenKind.KEYWORD and tok.text in LAYOUT_KEYWORDS:
                pending = tok.text
        end = toks[-1].span if toks else SourceSpan(1, 1, 1, 1)
        at = SourceSpan(end.end_line, end.end_col, end.end_line, end.end_col, end.file)
        if pending is not None:
            self.out.append(_virtual("{", at))
            self.out.append(_virtual("}", at))
        for ctx in reversed(self.stack):
            if ctx.kind == "layout":
                self.out.append(_virtual("}", at))
        self.stack.clear()
        return self.out

    def _emit(self, tok: Token) -> None:
        text, kind = tok.text, tok.kind
        if kind is TokenKind.KEYWORD:
            if text == "in":
                self._close_for_in(tok)
            elif text == "then":
                self._close_until_marker("if", tok.span, pop_marker=False)
            elif text == "else":
                self._close_until_marker("if", tok.span, pop_marker=True)
            elif text == "of":
                self._close_until_marker("case", tok.span, pop_marker=True)
        elif kind is TokenKind.SPECIAL:
            if text in ")]":
                self._close_bracket(tok)
            elif text == ",":
                self._close_for_comma(tok)
        elif kind is TokenKind.LAYOUT_BRACE and text == "}":
            self._close_bracket(tok)
        self.out.append(tok)
        if kind is TokenKind.KEYWORD and text in ("if", "case"):
            self.stack.append(_Ctx(text))
        elif kind is TokenKind.SPECIAL and text in "([":
            self.stack.append(_Ctx("bracket", opener=text))
        elif kind is TokenKind.LAYOUT_BRACE and text == "{":
            self.stack.append(_Ctx("explicit", opener="{"))


def resolve_layout(tokens: list[Token], implicit_top: bool = True) -> list[Token]:
    """Insert virtual braces and semicolons into a comment-free token list.

    ``implicit_top`` opens a block at the first token, which is what a module
    without a ``module ... where`` header needs.
    """
    return _Resolver(list(tokens)).run(implicit_top)
