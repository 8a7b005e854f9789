"""Shared token vocabulary used both as model input space and as the pool of
replacement/insertion tokens."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .lexer import DEAD_NAME, IDENT_RE, KEYWORDS, OPERATORS, RESERVED, model_tokens, tokenize

NUL = "<nul>"  # absent row; its embedding is pinned at zero
UNK = "<unk>"
NUL_ID = 0
UNK_ID = 1

# tokens that transform templates emit, so they must always be in the vocabulary
TEMPLATE_TOKENS = ("print", "if", "==", "!=", "=", DEAD_NAME, "1")


class Vocabulary:
    """Immutable token <-> id mapping with dense ids ``0..size-1``."""

    def __init__(self, tokens: Iterable[str], identifier_ok: Iterable[bool] | None = None):
        self.tokens = tuple(tokens)
        if self.tokens[:2] != (NUL, UNK):
            raise ValueError(f"vocabulary must start with {NUL!r}, {UNK!r}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate vocabulary entries")
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if identifier_ok is None:
            flags = [_identifier_legal(t) for t in self.tokens]
        else:
            flags = [bool(f) for f in identifier_ok]
            if len(flags) != len(self.tokens):
                raise ValueError("identifier_ok length does not match tokens")
            for t, f in zip(self.tokens, flags):
                if f and not _identifier_legal(t):
                    raise ValueError(f"token {t!r} cannot be identifier-legal")
        self.identifier_ok = np.array(flags, dtype=bool)
        self.identifier_ok.setflags(write=False)
        missing = [t for t in TEMPLATE_TOKENS if t not in self.index]
        if missing:
            raise ValueError(f"vocabulary lacks template tokens {missing}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.tokens == other.tokens
            and bool(np.array_equal(self.identifier_ok, other.identifier_ok))
        )

    def id(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def ids(self, texts: Iterable[str]) -> np.ndarray:
        return np.array([self.id(t) for t in texts], dtype=np.int64)

    def encode_source(self, source: str) -> np.ndarray:
        """Model-facing token ids of a MiniLang source string."""
        return self.ids(model_tokens(tokenize(source)))

    def to_json(self) -> dict:
        return {"tokens": list(self.tokens), "identifier_ok": [bool(f) for f in self.identifier_ok]}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["tokens"], data["identifier_ok"])


def _identifier_legal(token: str) -> bool:
    return bool(IDENT_RE.fullmatch(token)) and token not in RESERVED


def build_vocabulary(sources: Iterable[str], extra_identifiers: Iterable[str] = ()) -> Vocabulary:
    """Vocabulary of every model token in ``sources`` plus ``extra_identifiers``.

    Order is deterministic: specials, reserved words and operators, then the
    remaining tokens sorted.
    """
    fixed = [NUL, UNK] + sorted(RESERVED | KEYWORDS) + [op for op in OPERATORS] + ["1"]
    seen = set(fixed)
    ordered = []
    for t in fixed:
        if t not in ordered:
            ordered.append(t)
    rest = set()
    for src in sources:
        rest.update(model_tokens(tokenize(src)))
    rest.update(extra_identifiers)
    rest -= seen
    rest.discard("")
    return Vocabulary(ordered + sorted(rest))
