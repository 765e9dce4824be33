"""Tokenizer shared by the SDL and query parsers."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import GraphQLSyntaxError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[\s,﻿]+)
  | (?P<comment>\#[^\n\r]*)
  | (?P<block>\"\"\"(?:\\\"\"\"|[^"]|"(?!""))*\"\"\")
  | (?P<string>"(?:\\.|[^"\\\n\r])*")
  | (?P<float>-?(?:0|[1-9][0-9]*)(?:\.[0-9]+(?:[eE][+-]?[0-9]+)?|[eE][+-]?[0-9]+))
  | (?P<int>-?(?:0|[1-9][0-9]*))
  | (?P<name>[_A-Za-z][_0-9A-Za-z]*)
  | (?P<spread>\.\.\.)
  | (?P<punct>[!$&()\:=@\[\]{}|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise GraphQLSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "string":
                try:
                    value = json.loads(value)
                except ValueError:
                    raise GraphQLSyntaxError(
                        "invalid string escape", line, pos - line_start + 1
                    ) from None
            elif kind == "block":
                value = value[3:-3].replace('\\"""', '"""')
                kind = "string"
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        raw = m.group()
        nl = raw.count("\n")
        if nl:
            line += nl
            line_start = pos + raw.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "spread") and tok.value == value

    def at_name(self, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == "name" and (value is None or tok.value == value)

    def error(self, message: str, tok: Token | None = None) -> GraphQLSyntaxError:
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        return GraphQLSyntaxError(f"{message}, found {found}", tok.line, tok.column)

    def expect(self, value: str) -> Token:
        if not self.at(value):
            raise self.error(f"expected {value!r}")
        return self.next()

    def expect_name(self, value: str | None = None) -> Token:
        if not self.at_name(value):
            raise self.error(f"expected {value!r}" if value else "expected a name")
        return self.next()
