"""Lexer for MiniLang, a single-function Python-like language.

Whitespace carries no meaning: statements are separated by ``;`` and
multi-statement ``if`` bodies are wrapped in braces, so any re-spacing of a
token stream lexes back to the same tokens.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class LexError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TokenKind(enum.Enum):
    KEYWORD = "Keyword"
    IDENTIFIER = "Identifier"
    INT = "IntLiteral"
    STRING = "StringLiteral"
    BOOL = "BoolLiteral"
    OPERATOR = "Operator"
    PUNCT = "Punct"
    FIELD = "FieldName"


KEYWORDS = frozenset({"def", "return", "if", "else", "print", "self"})
BUILTINS = frozenset({"abs", "min", "max", "len"})
BOOLS = frozenset({"True", "False"})
DEAD_NAME = "_dead"
# never legal as a replacement identifier
RESERVED = KEYWORDS | BUILTINS | BOOLS | {DEAD_NAME}

OPERATORS = ("//", "==", "!=", "=", "+", "-", "*", "<", ">")
PUNCTUATION = "():;,.{}"

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
    |(?P<string>"[A-Za-z0-9_ ]*")
    |(?P<int>0|[1-9][0-9]*)
    |(?P<name>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<op>//|==|!=|[=+\-*<>])
    |(?P<punct>[():;,.{}])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind
    offset: int
    length: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.offset, self.length)

    def __repr__(self) -> str:
        return f"Token({self.kind.value} {self.text!r})"


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, dropping whitespace.

    Identifiers directly after ``self .`` are tagged as field names.
    """
    tokens: list[Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            offset = len(source[:pos].encode("utf-8"))
            raise LexError(f"unexpected character {source[pos]!r}", offset)
        group = m.lastgroup
        text = m.group()
        pos = m.end()
        if group == "ws":
            continue
        # the alphabet is ASCII, so character offsets are byte offsets
        offset = m.start()
        if group == "string":
            kind = TokenKind.STRING
        elif group == "int":
            kind = TokenKind.INT
        elif group == "name":
            if text in KEYWORDS:
                kind = TokenKind.KEYWORD
            elif text in BOOLS:
                kind = TokenKind.BOOL
            elif (
                len(tokens) >= 2
                and tokens[-1].text == "."
                and tokens[-2].text == "self"
            ):
                kind = TokenKind.FIELD
            else:
                kind = TokenKind.IDENTIFIER
        elif group == "op":
            kind = TokenKind.OPERATOR
        else:
            kind = TokenKind.PUNCT
        tokens.append(Token(text, kind, offset, len(text)))
    if not tokens:
        raise LexError("empty program", 0)
    return tokens


def join_tokens(texts) -> str:
    """Canonical single-spaced rendering of a token text sequence."""
    return " ".join(texts)


def model_tokens(tokens: list[Token]) -> list[str]:
    """Token texts as seen by the summarizer.

    Delimiters are dropped, the function name (the prediction target) is
    hidden, and string literals contribute their unquoted contents.
    """
    out = []
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.PUNCT:
            continue
        if i == 1 and tokens[0].text == "def":
            continue
        if tok.kind is TokenKind.STRING:
            out.append(tok.text[1:-1])
        else:
            out.append(tok.text)
    return out
