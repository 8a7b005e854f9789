"""Materialization of a discrete site/token selection into MiniLang source."""
from __future__ import annotations

from typing import Iterable

from .lexer import DEAD_NAME, join_tokens
from .nodes import Function
from .parser import unparse_texts
from .sites import SiteMap, TransformKind
from .vocab import Vocabulary

PLACEHOLDER = None  # marks the optimizable slot inside a template

# model-facing token layout of each template
PRINT_TEMPLATE = ("print", PLACEHOLDER)
DEAD_CODE_TEMPLATE = ("if", PLACEHOLDER, "!=", PLACEHOLDER, DEAD_NAME, "=", "1")


def bool_template(literal: str) -> tuple:
    return (PLACEHOLDER, "==" if literal == "True" else "!=", PLACEHOLDER)


class IllegalSelection(ValueError):
    pass


def _quoted(tok: str) -> str:
    return f'"{tok}"'


def print_source(tok: str) -> list[str]:
    return ["print", "(", _quoted(tok), ")", ";"]


def dead_code_source(tok: str) -> list[str]:
    return ["if", _quoted(tok), "!=", _quoted(tok), ":", DEAD_NAME, "=", "1", ";"]


def bool_source(literal: str, tok: str) -> list[str]:
    # parenthesized so that comparison chaining cannot change the meaning
    op = "==" if literal == "True" else "!="
    return ["(", _quoted(tok), op, _quoted(tok), ")"]


def check_selection(sitemap: SiteMap, selection, vocab: Vocabulary) -> dict[int, str]:
    """Validate ``selection`` and return it as ``{site id: token text}``."""
    chosen: dict[int, str] = {}
    rename_tokens: dict[str, int] = {}
    for sid, tid in selection:
        sid, tid = int(sid), int(tid)
        if not 0 <= sid < len(sitemap):
            raise IllegalSelection(f"unknown site {sid}")
        if sid in chosen:
            raise IllegalSelection(f"site {sid} selected twice")
        site = sitemap[sid]
        if not 0 <= tid < len(vocab) or not site.mask[tid]:
            raise IllegalSelection(f"token {tid} is not a legal candidate for site {sid}")
        tok = vocab.tokens[tid]
        if site.kind.is_rename:
            if tok in rename_tokens:
                raise IllegalSelection(
                    f"sites {rename_tokens[tok]} and {sid} both renamed to {tok!r}"
                )
            if tok in sitemap.identifiers:
                raise IllegalSelection(f"{tok!r} collides with an existing identifier")
            rename_tokens[tok] = sid
        chosen[sid] = tok
    return chosen


def materialize(fn: Function, sitemap: SiteMap, selection: Iterable, vocab: Vocabulary) -> str:
    """Apply ``selection`` (pairs of site id and vocabulary id) to ``fn``.

    Unselected sites leave the program untouched; the result is rendered
    with canonical single spacing.
    """
    chosen = check_selection(sitemap, selection, vocab)
    texts = unparse_texts(fn)
    replace: dict[int, list[str]] = {}
    inserts: dict[int, list[str]] = {}
    for sid, tok in sorted(chosen.items()):
        site = sitemap[sid]
        kind = site.kind
        if kind.is_rename:
            for t in site.token_indices:
                replace[t] = [tok]
        elif kind is TransformKind.REPLACE_BOOL_LITERAL:
            (t,) = site.token_indices
            replace[t] = bool_source(site.text, tok)
        elif kind is TransformKind.INSERT_PRINT:
            inserts.setdefault(site.anchor, []).extend(print_source(tok))
        else:
            inserts.setdefault(site.anchor, []).extend(dead_code_source(tok))
    out: list[str] = []
    for i, text in enumerate(texts):
        out.extend(inserts.get(i, ()))
        out.extend(replace.get(i, (text,)))
    return join_tokens(out)
