"""Tokenizer for ``.dpl`` source."""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset(
    {"let", "in", "letrec", "if", "then", "else", "rd", "fd", "grad", "fst", "snd", "true", "false", "real", "unit"}
)


class ParseError(Exception):
    """A lexical or syntax error at a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "ident", "number", "kw", "sym", "eof"
    text: str
    line: int
    col: int


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_%][A-Za-z0-9_%']*)
  | (?P<sym><\.|>\.|\(\)|[<>(),.:=+\-*^])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        chunk = match.group()
        if kind != "ws":
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
