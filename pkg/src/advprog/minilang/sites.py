"""Obfuscation site extraction.

A *replace* site ties together every token occurrence of one name (or a
single boolean literal); an *insert* site is a top-level statement boundary
where a templated statement carrying one optimizable token may be added.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .lexer import DEAD_NAME
from .nodes import Assign, BinOp, BoolLit, Call, FieldAccess, Function, If, Var
from .vocab import Vocabulary


class TransformKind(enum.Enum):
    RENAME_LOCAL_VAR = "RenameLocalVar"
    RENAME_PARAM = "RenameParam"
    RENAME_FIELD = "RenameField"
    REPLACE_BOOL_LITERAL = "ReplaceBoolLiteral"
    INSERT_PRINT = "InsertPrint"
    INSERT_DEAD_CODE = "InsertDeadCode"

    @property
    def is_replace(self) -> bool:
        return self in _REPLACE

    @property
    def is_rename(self) -> bool:
        return self in _RENAME

    @classmethod
    def parse(cls, text: str) -> "TransformKind":
        for k in cls:
            if text in (k.value, k.name, k.name.lower()):
                return k
        raise ValueError(f"unknown transform kind {text!r}")


_RENAME = frozenset(
    {TransformKind.RENAME_LOCAL_VAR, TransformKind.RENAME_PARAM, TransformKind.RENAME_FIELD}
)
_REPLACE = _RENAME | {TransformKind.REPLACE_BOOL_LITERAL}


@dataclass(frozen=True)
class Site:
    id: int
    kind: TransformKind
    token_indices: tuple[int, ...]
    text: str | None = None  # original name / literal for replace sites
    anchor: int | None = None  # token index an insert goes in front of
    mask: np.ndarray = field(default=None, compare=False, repr=False)

    @property
    def candidates(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


@dataclass(frozen=True)
class SiteMap:
    sites: tuple[Site, ...]
    site_of_token: dict = field(compare=False)
    identifiers: frozenset = frozenset()  # every name already used by the program

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __getitem__(self, i) -> Site:
        return self.sites[i]


def _walk_expr(e, visit):
    visit(e)
    if isinstance(e, BinOp):
        _walk_expr(e.left, visit)
        _walk_expr(e.right, visit)
    elif isinstance(e, Call):
        for a in e.args:
            _walk_expr(a, visit)


def _walk_stmts(body, visit_stmt, visit_expr):
    for s in body:
        visit_stmt(s)
        if isinstance(s, Assign):
            _walk_expr(s.target, visit_expr)
            _walk_expr(s.value, visit_expr)
        elif isinstance(s, If):
            _walk_expr(s.cond, visit_expr)
            _walk_stmts(s.then, visit_stmt, visit_expr)
            if s.orelse is not None:
                _walk_stmts(s.orelse, visit_stmt, visit_expr)
        else:
            _walk_expr(s.value, visit_expr)


def extract_sites(fn: Function, vocab: Vocabulary, exclude=()) -> SiteMap:
    """Enumerate every transformable site of ``fn``.

    ``exclude`` drops whole transform kinds (used by ablations).
    """
    exclude = frozenset(exclude)
    params = [p.name for p in fn.params]
    var_occ: dict[str, list[int]] = {p.name: [p.tok] for p in fn.params}
    field_occ: dict[str, list[int]] = {}
    locals_order: list[str] = []
    bools: list[BoolLit] = []

    def visit_expr(e):
        if isinstance(e, Var):
            if e.name not in var_occ:
                locals_order.append(e.name)
                var_occ[e.name] = []
            var_occ[e.name].append(e.tok)
        elif isinstance(e, FieldAccess):
            field_occ.setdefault(e.name, []).append(e.tok)
        elif isinstance(e, BoolLit):
            bools.append(e)

    _walk_stmts(fn.body, lambda s: None, visit_expr)

    identifiers = frozenset(var_occ) | frozenset(field_occ) | {fn.name}
    legal = vocab.identifier_ok
    unused = legal.copy()
    for name in identifiers:
        if name in vocab:
            unused[vocab.index[name]] = False
    unused.setflags(write=False)

    raw = []
    for name in params:
        raw.append((TransformKind.RENAME_PARAM, tuple(sorted(var_occ[name])), name, None, unused))
    for name in locals_order:
        if name == DEAD_NAME:
            continue
        raw.append((TransformKind.RENAME_LOCAL_VAR, tuple(sorted(var_occ[name])), name, None, unused))
    for name, occ in field_occ.items():
        raw.append((TransformKind.RENAME_FIELD, tuple(sorted(occ)), name, None, unused))
    for b in sorted(bools, key=lambda b: b.tok):
        raw.append(
            (TransformKind.REPLACE_BOOL_LITERAL, (b.tok,), "True" if b.value else "False", None, legal)
        )
    for stmt in fn.body:
        for kind in (TransformKind.INSERT_PRINT, TransformKind.INSERT_DEAD_CODE):
            raw.append((kind, (), None, stmt.first_tok, legal))

    sites = []
    site_of_token = {}
    for kind, toks, text, anchor, mask in raw:
        if kind in exclude or not mask.any():
            continue
        sid = len(sites)
        sites.append(Site(sid, kind, toks, text, anchor, mask))
        for t in toks:
            site_of_token[t] = sid
    return SiteMap(tuple(sites), site_of_token, identifiers)


def restrict_sites(sitemap: SiteMap, keep, candidates=None) -> SiteMap:
    """Sub-map with the sites ``keep`` (renumbered in order).

    ``candidates`` optionally maps an old site id to a boolean vocabulary
    mask that is intersected with the site's own mask.
    """
    sites = []
    site_of_token = {}
    for old in keep:
        s = sitemap[old]
        mask = s.mask
        if candidates is not None and old in candidates:
            mask = mask & np.asarray(candidates[old], dtype=bool)
            mask.setflags(write=False)
        sid = len(sites)
        sites.append(Site(sid, s.kind, s.token_indices, s.text, s.anchor, mask))
        for t in s.token_indices:
            site_of_token[t] = sid
    return SiteMap(tuple(sites), site_of_token, sitemap.identifiers)
