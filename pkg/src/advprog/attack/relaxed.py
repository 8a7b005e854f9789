"""Relaxed perturbed program: ``P' = (1 - z) * P + z * u`` over token slots.

Every slot is one row of ``P``.  Slots belonging to a site share that site's
selection value ``z``.  A slot's replacement row ``u`` is either the site's
optimizable distribution (all optimizable slots of a site are tied) or a
fixed one-hot row.  Template tokens of insert transforms sit in ``P`` as the
absent ``<nul>`` token with their template token as fixed ``u``, so that
switching the site on materializes the template and switching it off removes
it without changing the program length ``n``.

The optimizer works on the compact per-site variables ``zs`` (one value per
site) and ``us`` (one simplex row per site); ``z_full``/``u_full`` expand
them to the per-slot matrices of the formulation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..minilang.lexer import TokenKind, tokenize
from ..minilang.nodes import Function
from ..minilang.parser import unparse
from ..minilang.sites import SiteMap, TransformKind
from ..minilang.transforms import DEAD_CODE_TEMPLATE, PLACEHOLDER, PRINT_TEMPLATE, bool_template
from ..minilang.vocab import NUL_ID, Vocabulary


class NoSites(ValueError):
    pass


@dataclass
class SlotLayout:
    """Static description of the slots of one program."""

    p_ids: np.ndarray  # (n,) original token per slot
    slot_site: np.ndarray  # (n,) site index or -1
    slot_var: np.ndarray  # (n,) True where u is the site's optimizable row
    fixed_ids: np.ndarray  # (n,) fixed replacement token, -1 if none
    masks: np.ndarray  # (S, V) candidate tokens per site
    kinds: tuple  # (S,) TransformKind per site
    vocab_size: int

    @property
    def n(self) -> int:
        return len(self.p_ids)

    @property
    def n_sites(self) -> int:
        return self.masks.shape[0]

    def __post_init__(self):
        S, V = self.masks.shape
        self.nvar = np.bincount(self.slot_site[self.slot_var], minlength=S).astype(np.float64)
        on = self.slot_site >= 0
        # D[s] = F[s] + nvar[s] * us[s] - Pc[s]; these are the constant parts
        self.site_orig = np.zeros((S, V))
        np.add.at(self.site_orig, (self.slot_site[on], self.p_ids[on]), 1.0)
        fixed = on & ~self.slot_var
        self.site_fixed = np.zeros((S, V))
        np.add.at(self.site_fixed, (self.slot_site[fixed], self.fixed_ids[fixed]), 1.0)
        self.clean_mass = np.bincount(self.p_ids, minlength=V).astype(np.float64)
        self.groups = [np.flatnonzero(self.slot_site == s) for s in range(S)]
        self.rename = np.array([k.is_rename for k in self.kinds], dtype=bool)

    def mass(self, zs: np.ndarray, us: np.ndarray) -> np.ndarray:
        """Column sums of ``P'`` (all the model needs)."""
        return self.clean_mass + zs @ self.direction(us)

    def direction(self, us: np.ndarray) -> np.ndarray:
        return self.site_fixed + self.nvar[:, None] * us - self.site_orig

    def z_full(self, zs: np.ndarray) -> np.ndarray:
        z = np.zeros(self.n)
        on = self.slot_site >= 0
        z[on] = zs[self.slot_site[on]]
        return z

    def u_full(self, us: np.ndarray) -> np.ndarray:
        u = np.zeros((self.n, self.vocab_size))
        rows = np.arange(self.n)
        plain = self.slot_site < 0
        u[rows[plain], self.p_ids[plain]] = 1.0
        fixed = (self.slot_site >= 0) & ~self.slot_var
        u[rows[fixed], self.fixed_ids[fixed]] = 1.0
        var = self.slot_var
        u[var] = us[self.slot_site[var]]
        return u

    def p_full(self) -> np.ndarray:
        P = np.zeros((self.n, self.vocab_size))
        P[np.arange(self.n), self.p_ids] = 1.0
        return P

    def rows(self, zs: np.ndarray, us: np.ndarray) -> np.ndarray:
        z = self.z_full(zs)[:, None]
        return (1.0 - z) * self.p_full() + z * self.u_full(us)

    def vertex_ids(self, selection) -> np.ndarray:
        """Model-facing ids of the program with ``selection`` applied."""
        chosen = {int(s): int(t) for s, t in selection}
        out = []
        for i in range(self.n):
            s = int(self.slot_site[i])
            if s in chosen:
                tid = chosen[s] if self.slot_var[i] else int(self.fixed_ids[i])
            else:
                tid = int(self.p_ids[i])
            if tid != NUL_ID:
                out.append(tid)
        return np.array(out, dtype=np.int64)


@dataclass
class RelaxedProgram:
    """Feasible point of the relaxed problem together with its layout."""

    layout: SlotLayout
    zs: np.ndarray
    us: np.ndarray
    k: int

    @property
    def masks(self) -> np.ndarray:
        return self.layout.masks

    def copy(self) -> "RelaxedProgram":
        return RelaxedProgram(self.layout, self.zs.copy(), self.us.copy(), self.k)

    @property
    def z(self) -> np.ndarray:
        return self.layout.z_full(self.zs)

    @property
    def u(self) -> np.ndarray:
        return self.layout.u_full(self.us)

    @property
    def P(self) -> np.ndarray:
        return self.layout.p_full()


def build_layout(fn: Function, sitemap: SiteMap, vocab: Vocabulary) -> SlotLayout:
    tokens = tokenize(unparse(fn))
    inserts: dict[int, list] = {}
    for site in sitemap:
        if site.anchor is not None:
            inserts.setdefault(site.anchor, []).append(site)
    p_ids, slot_site, slot_var, fixed_ids = [], [], [], []

    def emit(p, site=-1, var=False, fixed=-1):
        p_ids.append(p)
        slot_site.append(site)
        slot_var.append(var)
        fixed_ids.append(fixed)

    def emit_template(site_id, template):
        for t in template:
            if t is PLACEHOLDER:
                emit(NUL_ID, site_id, True)
            else:
                emit(NUL_ID, site_id, False, vocab.index[t])

    for i, tok in enumerate(tokens):
        for site in inserts.get(i, ()):
            template = PRINT_TEMPLATE if site.kind is TransformKind.INSERT_PRINT else DEAD_CODE_TEMPLATE
            emit_template(site.id, template)
        if tok.kind is TokenKind.PUNCT or i == 1:
            continue
        text = tok.text[1:-1] if tok.kind is TokenKind.STRING else tok.text
        tid = vocab.id(text)
        sid = sitemap.site_of_token.get(i)
        if sid is None:
            emit(tid)
        elif sitemap[sid].kind is TransformKind.REPLACE_BOOL_LITERAL:
            emit(tid, sid, False, NUL_ID)
            emit_template(sid, bool_template(sitemap[sid].text))
        else:
            emit(tid, sid, True)
    masks = np.array([s.mask for s in sitemap], dtype=bool).reshape(len(sitemap), len(vocab))
    return SlotLayout(
        p_ids=np.array(p_ids, dtype=np.int64),
        slot_site=np.array(slot_site, dtype=np.int64),
        slot_var=np.array(slot_var, dtype=bool),
        fixed_ids=np.array(fixed_ids, dtype=np.int64),
        masks=masks,
        kinds=tuple(s.kind for s in sitemap),
        vocab_size=len(vocab),
    )


def uniform_rows(masks: np.ndarray) -> np.ndarray:
    return masks / masks.sum(axis=1, keepdims=True)


def relax(fn: Function, sitemap: SiteMap, vocab: Vocabulary, k: int) -> RelaxedProgram:
    """Initial feasible point: equal selection mass, uniform candidate rows."""
    if k < 1:
        raise ValueError("perturbation strength k must be >= 1")
    if len(sitemap) == 0:
        raise NoSites("program has no transformable sites")
    layout = build_layout(fn, sitemap, vocab)
    S = layout.n_sites
    zs = np.full(S, min(k / S, 1.0))
    return RelaxedProgram(layout, zs, uniform_rows(layout.masks), k)
