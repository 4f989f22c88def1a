"""Shared tokenizer for the literal grammars (sets, functions, gauges, ...).

Tokens carry their offset so parse errors can point at a line/column.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError

SYMBOLS = ("..", "[", "]", "(", ")", "{", "}", ",", ":", ";", "=", "+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "ident" | "sym" | "end"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # ".." is the range symbol, not a decimal point
                    if j + 1 < n and text[j + 1] == ".":
                        break
                    seen_dot = True
                j += 1
            out.append(Token("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(Token("ident", text[i:j], i))
            i = j
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                out.append(Token("sym", sym, i))
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", *line_col(text, i))
    out.append(Token("end", "", n))
    return out


def line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    last_nl = text.rfind("\n", 0, pos)
    return line, pos - last_nl


def number_value(tok: Token) -> Fraction:
    """Exact rational value of a numeric token (decimals read exactly)."""
    return Fraction(tok.text)


class TokenStream:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at_sym(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.text in texts

    def at_ident(self, *names: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and (not names or tok.text in names)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise self.error(f"expected {want!r}, found {tok.text!r}", tok)
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        pos = (tok or self.peek()).pos
        return ParseError(message, *line_col(self.text, pos))
