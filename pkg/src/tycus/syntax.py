"""Shared tokenizer and recursive-descent helpers for queries, shapes and terms."""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = ["Token", "ParseError", "tokenize", "TokenStream"]


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


_TOKENS = [
    ("ws", r"[ \t\r]+"),
    ("newline", r"\n"),
    ("comment", r"\#[^\n]*"),
    ("larrow", r"<-|←"),
    ("le", r"<=|≤"),
    ("ge", r">=|≥"),
    ("iri", r"<[^<>\s]+>"),
    ("blank", r"_:[A-Za-z0-9_]+"),
    ("string", r'"(?:[^"\\\n]|\\.)*"'),
    ("number", r"\d+(?:\.\d+)?(?![A-Za-z_$])"),
    ("var", r"\?[A-Za-z_][A-Za-z0-9_]*"),
    ("ident", r"[A-Za-z_][A-Za-z0-9_$]*"),
    ("arrow", r"->|→"),
    ("lambda", r"\\|λ"),
    ("and", r"\^|∧"),
    ("sym", r"[(){}\[\],.;:=/+\-⊤¬∨|*]"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKENS))


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _MASTER.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            value = m.group(kind)
            if kind == "sym":
                kind = value
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def unescape_string(raw: str) -> str:
    body = raw[1:-1]
    return re.sub(r"\\(.)", lambda m: "\n" if m.group(1) == "n" else m.group(1), body)


class TokenStream:
    """Cursor over a token list; the parsers in this package extend it."""

    def __init__(self, text_or_tokens):
        self.tokens = tokenize(text_or_tokens) if isinstance(text_or_tokens, str) else text_or_tokens
        self.pos = 0

    def peek(self, offset=0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, kind: str, value: str | None = None, offset=0) -> bool:
        tok = self.peek(offset)
        return tok.kind == kind and (value is None or tok.value == value)

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value in words

    def accept(self, kind: str, value: str | None = None):
        if self.at(kind, value):
            return self.next()
        return None

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, value):
            wanted = value or kind
            got = tok.value or tok.kind
            self.error(f"expected {wanted!r}, found {got!r}", tok)
        return self.next()

    def expect_keyword(self, word: str) -> Token:
        return self.expect("ident", word)

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect_eof(self):
        if not self.at("eof"):
            self.error(f"unexpected trailing input {self.peek().value!r}")
