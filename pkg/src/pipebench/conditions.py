"""Parser and AST for row-filter predicates.

Grammar::

    expr       := term ( ("and" | "or") term )*
    term       := "(" expr ")" | comparison
    comparison := ident cmp literal
    cmp        := "==" | "!=" | ">=" | "<=" | ">" | "<"

Identifiers are bare names or backtick-quoted (for spaces/specials);
literals are numbers, quoted strings, or booleans.  Boolean connectives
associate left with equal precedence, so ``a or b and c`` groups as
``(a or b) and c``; use parentheses for anything else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

COMPARATORS = ("==", "!=", ">=", "<=", ">", "<")

LiteralValue = Union[int, float, str, bool]


class ConditionError(ValueError):
    """Syntax or lexical error in a condition string."""

    def __init__(self, message: str, position: int = -1):
        self.position = position
        if position >= 0:
            message = f"{message} (at position {position})"
        super().__init__(message)


@dataclass(frozen=True)
class Comparison:
    column: str
    op: str
    literal: LiteralValue

    def columns(self) -> set[str]:
        return {self.column}


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    left: "Condition"
    right: "Condition"

    def columns(self) -> set[str]:
        return self.left.columns() | self.right.columns()


Condition = Union[Comparison, BoolOp]


# -- lexer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<cmp>==|!=|>=|<=|>|<)
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<string>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<backtick>`[^`]*`)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(s: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(s):
        m = _TOKEN_RE.match(s, pos)
        if m is None:
            raise ConditionError(f"unexpected character {s[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    return tokens


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", r"\1", body)


# -- parser ---------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], source: str):
        self.tokens = tokens
        self.source = source
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def advance(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ConditionError("unexpected end of condition", len(self.source))
        self.i += 1
        return tok

    def parse(self) -> Condition:
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ConditionError(f"trailing input {tok.text!r}", tok.pos)
        return node

    def expr(self) -> Condition:
        node = self.term()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "word" and tok.text.lower() in ("and", "or"):
                self.advance()
                rhs = self.term()
                node = BoolOp(tok.text.lower(), node, rhs)
            else:
                return node

    def term(self) -> Condition:
        tok = self.peek()
        if tok is None:
            raise ConditionError("unexpected end of condition", len(self.source))
        if tok.kind == "lparen":
            self.advance()
            node = self.expr()
            closing = self.advance()
            if closing.kind != "rparen":
                raise ConditionError("expected ')'", closing.pos)
            return node
        return self.comparison()

    def comparison(self) -> Comparison:
        tok = self.advance()
        if tok.kind == "backtick":
            column = tok.text[1:-1]
        elif tok.kind == "word":
            column = tok.text
        else:
            raise ConditionError(f"expected column name, got {tok.text!r}", tok.pos)

        op_tok = self.advance()
        if op_tok.kind != "cmp":
            raise ConditionError(f"expected comparator, got {op_tok.text!r}", op_tok.pos)

        lit_tok = self.advance()
        literal: LiteralValue
        if lit_tok.kind == "number":
            text = lit_tok.text
            if re.fullmatch(r"-?\d+", text):
                literal = int(text)
            else:
                literal = float(text)
        elif lit_tok.kind == "string":
            literal = _unescape(lit_tok.text[1:-1])
        elif lit_tok.kind == "word" and lit_tok.text in ("true", "false", "True", "False"):
            literal = lit_tok.text in ("true", "True")
        else:
            raise ConditionError(f"expected literal, got {lit_tok.text!r}", lit_tok.pos)
        return Comparison(column, op_tok.text, literal)


def parse_condition(s: str) -> Condition:
    """Parse a condition string into its AST."""
    if not isinstance(s, str) or not s.strip():
        raise ConditionError("empty condition")
    return _Parser(_tokenize(s), s).parse()


# -- rendering ------------------------------------------------------------

_PLAIN_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_RESERVED_WORDS = {"and", "or", "true", "false", "True", "False"}


def render_column(name: str) -> str:
    """Backtick-quote a column name unless it is a plain identifier."""
    if _PLAIN_IDENT_RE.fullmatch(name) and name not in _RESERVED_WORDS:
        return name
    return f"`{name}`"


def render_literal(value: LiteralValue, quote: str = "'") -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace(quote, "\\" + quote)
        return f"{quote}{escaped}{quote}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_condition(cond: Condition, quote: str = "'") -> str:
    """Canonical text form; ``parse_condition`` inverts it."""
    if isinstance(cond, Comparison):
        return f"{render_column(cond.column)} {cond.op} {render_literal(cond.literal, quote)}"
    left = render_condition(cond.left, quote)
    right = render_condition(cond.right, quote)
    # Left-associative chains render flat; a compound right side needs parens.
    if isinstance(cond.right, BoolOp):
        right = f"({right})"
    return f"{left} {cond.op} {right}"
