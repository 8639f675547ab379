"""Lossless tokenizer for Haskell source.

Whitespace is never a token; it is kept on the following token as
``leading`` (and on the token list as ``trailing``) so that
``untokenize(tokenize(src)) == src`` for every input.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from hsrefactor.errors import HsRefactorError

KEYWORDS = frozenset(
    {
        "case", "class", "data", "default", "deriving", "do", "else",
        "foreign", "if", "import", "in", "infix", "infixl", "infixr",
        "instance", "let", "module", "newtype", "of", "then", "type",
        "where", "_",
    }
)
RESERVED_OPS = frozenset({"..", ":", "::", "=", "\\", "|", "<-", "->", "@", "~", "=>"})
SYMBOL_CHARS = frozenset("!#$%&*+./<=>?@\\^|-~:")
SPECIAL_CHARS = frozenset("(),[]`")
BRACE_CHARS = frozenset("{};")


class TokenKind(enum.Enum):
    IDENTIFIER = "identifier"
    OPERATOR = "operator"
    KEYWORD = "keyword"
    LITERAL = "literal"
    LAYOUT_BRACE = "layout-brace"
    COMMENT = "comment"
    SPECIAL = "special"


@dataclass(frozen=True, order=True)
class SourceSpan:
    """1-based, end-exclusive source region."""

    start_line: int
    start_col: int
    end_line: int
    end_col: int
    file: str = ""

    def __post_init__(self):
        if min(self.start_line, self.start_col, self.end_line, self.end_col) < 1:
            raise ValueError(f"span positions must be >= 1: {self}")
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"span start after end: {self}")

    @property
    def start(self) -> tuple[int, int]:
        return (self.start_line, self.start_col)

    @property
    def end(self) -> tuple[int, int]:
        return (self.end_line, self.end_col)

    def contains(self, other: SourceSpan) -> bool:
        return self.start <= other.start and other.end <= self.end

    def cover(self, other: SourceSpan) -> SourceSpan:
        lo = min(self.start, other.start)
        hi = max(self.end, other.end)
        return SourceSpan(lo[0], lo[1], hi[0], hi[1], self.file)

    def __str__(self) -> str:
        prefix = f"{self.file}:" if self.file else ""
        return f"{prefix}{self.start_line}:{self.start_col}-{self.end_line}:{self.end_col}"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan
    leading: str = ""
    offset: int = 0
    virtual: bool = False

    @property
    def end_offset(self) -> int:
        return self.offset + len(self.text)

    def is_(self, kind: TokenKind, text: str | None = None) -> bool:
        return self.kind is kind and (text is None or self.text == text)


class TokenList(list):
    """A list of tokens that remembers the whitespace after the last one."""

    trailing: str = ""


class LexError(HsRefactorError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.span = span


class UnterminatedString(LexError):
    pass


class UnterminatedBlockComment(LexError):
    pass


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch in "_'"


class _Scanner:
    def __init__(self, source: str, file: str):
        self.src = source
        self.file = file
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self, k: int = 0) -> str:
        i = self.pos + k
        return self.src[i] if i < len(self.src) else ""

    def advance_to(self, end: int) -> None:
        chunk = self.src[self.pos:end]
        newlines = chunk.count("\n")
        if newlines:
            self.line += newlines
            self.col = len(chunk) - chunk.rfind("\n")
        else:
            self.col += len(chunk)
        self.pos = end

    def span_from(self, line: int, col: int) -> SourceSpan:
        return SourceSpan(line, col, self.line, self.col, self.file)


def _scan_block_comment(s: _Scanner) -> int:
    depth = 0
    i = s.pos
    n = len(s.src)
    while i < n:
        two = s.src[i:i + 2]
        if two == "{-":
            depth += 1
            i += 2
        elif two == "-}":
            depth -= 1
            i += 2
            if depth == 0:
                return i
        else:
            i += 1
    raise UnterminatedBlockComment(
        "unterminated block comment", SourceSpan(s.line, s.col, s.line, s.col + 2, s.file)
    )


def _scan_line_comment(s: _Scanner) -> int | None:
    """Return the end offset if a line comment starts here, else None."""
    i = s.pos
    n = len(s.src)
    while i < n and s.src[i] == "-":
        i += 1
    if i - s.pos < 2:
        return None
    if i < n and s.src[i] in SYMBOL_CHARS:
        return None  # an operator such as -->
    nl = s.src.find("\n", i)
    return n if nl < 0 else nl


def _scan_quoted(s: _Scanner, quote: str) -> int:
    i = s.pos + 1
    n = len(s.src)
    while i < n:
        ch = s.src[i]
        if ch == "\\":
            i += 2
            continue
        if ch == quote:
            return i + 1
        if ch == "\n" and quote == "'":
            break
        if ch == "\n":
            # string gaps are the only legal newlines in a string literal
            j = s.src.rfind("\\", s.pos, i)
            if j < 0 or s.src[j + 1:i].strip():
                break
        i += 1
    raise UnterminatedString(
        "unterminated string literal" if quote == '"' else "unterminated character literal",
        SourceSpan(s.line, s.col, s.line, s.col + 1, s.file),
    )


def _scan_char_or_prime(s: _Scanner) -> int | None:
    """Character literal starting at a quote, or None when it is not one."""
    src = s.src
    i = s.pos
    if src[i + 1:i + 2] == "\\":
        return _scan_quoted(s, "'")
    if len(src) > i + 2 and src[i + 2] == "'" and src[i + 1] != "\n":
        return i + 3
    return None


def _scan_number(s: _Scanner) -> int:
    src = s.src
    i = s.pos
    n = len(src)
    if src[i] == "0" and i + 1 < n and src[i + 1] in "xXoObB":
        digits = {"x": "0123456789abcdefABCDEF_", "o": "01234567_", "b": "01_"}[src[i + 1].lower()]
        j = i + 2
        while j < n and src[j] in digits:
            j += 1
        if j > i + 2:
            return j
    j = i
    while j < n and (src[j].isdigit() or src[j] == "_"):
        j += 1
    if j + 1 < n and src[j] == "." and src[j + 1].isdigit():
        j += 1
        while j < n and src[j].isdigit():
            j += 1
    if j < n and src[j] in "eE":
        k = j + 1
        if k < n and src[k] in "+-":
            k += 1
        if k < n and src[k].isdigit():
            while k < n and src[k].isdigit():
                k += 1
            j = k
    return j


def _scan_name(s: _Scanner) -> tuple[int, TokenKind]:
    """Identifier, possibly module-qualified (``Data.Map.lookup``, ``M.!``)."""
    src = s.src
    n = len(src)
    i = s.pos
    while True:
        start = i
        while i < n and _is_ident_char(src[i]):
            i += 1
        word_is_con = src[start].isupper()
        if not (word_is_con and i + 1 < n and src[i] == "."):
            break
        nxt = src[i + 1]
        if _is_ident_start(nxt):
            i += 1
            continue
        if nxt in SYMBOL_CHARS:
            j = i + 1
            while j < n and src[j] in SYMBOL_CHARS:
                j += 1
            return j, TokenKind.OPERATOR
        break
    text = src[s.pos:i]
    kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENTIFIER
    return i, kind


def tokenize(source: str, file: str = "") -> TokenList:
    """Split ``source`` into tokens, keeping comments and whitespace."""
    s = _Scanner(source, file)
    tokens = TokenList()
    n = len(source)
    while True:
        ws_start = s.pos
        while s.pos < n and source[s.pos] in " \t\r\n\f\v":
            s.advance_to(s.pos + 1)
        leading = source[ws_start:s.pos]
        if s.pos >= n:
            tokens.trailing = leading
            return tokens
        ch = source[s.pos]
        line, col, start = s.line, s.col, s.pos
        end: int | None = None
        kind: TokenKind
        if source.startswith("{-", s.pos):
            end, kind = _scan_block_comment(s), TokenKind.COMMENT
        elif ch == "-" and (end := _scan_line_comment(s)) is not None:
            kind = TokenKind.COMMENT
        elif ch == '"':
            end, kind = _scan_quoted(s, '"'), TokenKind.LITERAL
        elif ch == "'" and (end := _scan_char_or_prime(s)) is not None:
            kind = TokenKind.LITERAL
        elif ch.isdigit():
            end, kind = _scan_number(s), TokenKind.LITERAL
        elif _is_ident_start(ch):
            end, kind = _scan_name(s)
        elif ch in BRACE_CHARS:
            end, kind = s.pos + 1, TokenKind.LAYOUT_BRACE
        elif ch in SPECIAL_CHARS:
            end, kind = s.pos + 1, TokenKind.SPECIAL
        elif ch in SYMBOL_CHARS:
            end = s.pos
            while end < n and source[end] in SYMBOL_CHARS:
                end += 1
            kind = TokenKind.OPERATOR
        else:
            # stray character (e.g. a lone quote); keep it so nothing is lost
            end, kind = s.pos + 1, TokenKind.OPERATOR
        s.advance_to(end)
        tokens.append(
            Token(kind, source[start:end], s.span_from(line, col), leading=leading, offset=start)
        )


def untokenize(tokens: list[Token]) -> str:
    """Inverse of :func:`tokenize`."""
    parts = []
    for tok in tokens:
        if tok.virtual:
            continue
        parts.append(tok.leading)
        parts.append(tok.text)
    parts.append(getattr(tokens, "trailing", ""))
    return "".join(parts)
