"""Slow, independent reference solvers used to check the attack machinery.

Nothing here calls into the attack package: projections are solved by
sorting or by exhaustive search over a grid, gradients by central
differences, and attacks by enumerating every feasible selection and
evaluating the materialized source.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from . import summarizer as sm
from .minilang.parser import parse_source
from .minilang.nodes import Function
from .minilang.sites import SiteMap, extract_sites, restrict_sites
from .minilang.transforms import materialize
from .minilang.vocab import Vocabulary


def sort_simplex_oracle(v) -> np.ndarray:
    """Exact projection onto the probability simplex by sort-and-threshold."""
    v = np.asarray(v, dtype=np.float64)
    s = np.sort(v)[::-1]
    css = np.cumsum(s) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(s - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def grid_project_oracle(v, k: float, resolution: float = 1e-2, simplex: bool = False) -> np.ndarray:
    """Nearest grid point of ``{x in [0,1]^n : sum x <= k}`` (or ``= 1``).

    The squared distance separates over coordinates, so the search over
    all ``(1/resolution + 1)^n`` grid points reduces to a knapsack-style
    dynamic program over the summed grid units; the result is the exact
    grid minimizer.
    """
    v = np.asarray(v, dtype=np.float64)
    n = len(v)
    if n > 4:
        raise ValueError("grid oracle supports n <= 4")
    if resolution > 1e-2:
        raise ValueError("resolution must be <= 1e-2")
    steps = int(round(1.0 / resolution))
    levels = np.arange(steps + 1) / steps
    cap = steps if simplex else min(int(math.floor(k * steps + 1e-9)), n * steps)
    inf = float("inf")
    best = np.full(cap + 1, inf)  # best[b]: cost of the prefix using exactly b units
    best[0] = 0.0
    picks = np.zeros((n, cap + 1), dtype=np.int64)
    for i in range(n):
        cost_i = (levels - v[i]) ** 2
        nxt = np.full(cap + 1, inf)
        for a in range(min(steps, cap) + 1):
            cand = best[: cap + 1 - a] + cost_i[a]
            better = cand < nxt[a:]
            nxt[a:][better] = cand[better]
            picks[i, a:][better] = a
        best = nxt
    b = cap if simplex else int(np.argmin(best))
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        a = picks[i, b]
        x[i] = levels[a]
        b -= a
    return x


def fd_gradient(f, x, h: float = 1e-4, coords=None) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at array ``x``.

    ``coords`` (a boolean array shaped like ``x``) limits the coordinates
    that are differenced; the rest are reported as zero.
    """
    if not 1e-6 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-6, 1e-3]")
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    which = range(flat.size) if coords is None else np.flatnonzero(np.asarray(coords).reshape(-1))
    for i in which:
        old = flat[i]
        flat[i] = old + h
        up = f(x)
        flat[i] = old - h
        down = f(x)
        flat[i] = old
        gflat[i] = (up - down) / (2 * h)
    return g


# -- tiny exhaustive instances ---------------------------------------------------

TINY_TEMPLATES = (
    "def {f}(a): return a",
    "def {f}(a): b = a; return b",
    "def {f}(a, b): return a + b",
    "def {f}(a, b): return a * b",
    "def {f}(a): return abs(a)",
    "def {f}(a, b): return min(a, b)",
    "def {f}(a): self.x = a; return a",
    "def {f}(a): print(\"hi\"); return a",
)


@dataclass
class TinyInstance:
    fn: Function
    sitemap: SiteMap
    vocab: Vocabulary
    model: sm.SummarizerModel
    target: tuple  # output subtokens
    k: int

    @property
    def source(self) -> str:
        from .minilang.parser import unparse

        return unparse(self.fn)

    def search_space(self) -> int:
        sizes = [int(s.mask.sum()) for s in self.sitemap]
        return sum(
            math.prod(sizes[j] for j in combo)
            for r in range(self.k + 1)
            for combo in itertools.combinations(range(len(sizes)), r)
        )


def make_tiny_instance(seed: int, model: sm.SummarizerModel, vocab: Vocabulary,
                       max_sites: int = 3, max_candidates: int = 8, k: int | None = None) -> TinyInstance:
    """Seeded instance with ``<= 8`` model tokens, ``<= 3`` sites, ``<= 8`` candidates."""
    rng = random.Random(seed)
    src = rng.choice(TINY_TEMPLATES).format(f="f")
    fn = parse_source(src)
    full = extract_sites(fn, vocab)
    keep = sorted(rng.sample(range(len(full)), min(max_sites, len(full))))
    cands = {}
    for old in keep:
        legal = np.flatnonzero(full[old].mask)
        pick = rng.sample(sorted(legal.tolist()), min(max_candidates, len(legal)))
        m = np.zeros(len(vocab), dtype=bool)
        m[pick] = True
        cands[old] = m
    sitemap = restrict_sites(full, keep, cands)
    ids = vocab.encode_source(src)
    target = tuple(sm.predict(model, ids))
    return TinyInstance(fn, sitemap, vocab, model, target, rng.randint(1, 2) if k is None else k)


def selection_loss(inst: TinyInstance, selection) -> float:
    """Attack loss (negated cross-entropy) of the materialized selection."""
    src = materialize(inst.fn, inst.sitemap, selection, inst.vocab)
    ids = inst.vocab.encode_source(src)
    return -sm.loss(sm.forward_ids(inst.model, ids), inst.model.encode_target(inst.target))


def exhaustive_attack(inst: TinyInstance, order_seed: int | None = None):
    """Exact minimum of the attack loss over all feasible selections.

    Returns ``(loss, selection)``; ties resolve to the lexicographically
    smallest selection so any enumeration order gives the same answer.
    ``order_seed`` shuffles the enumeration (for testing that claim).
    """
    candidates = [np.flatnonzero(s.mask).tolist() for s in inst.sitemap]
    combos = []
    for r in range(inst.k + 1):
        for sites in itertools.combinations(range(len(candidates)), r):
            for toks in itertools.product(*(candidates[s] for s in sites)):
                combos.append(tuple(zip(sites, toks)))
    if order_seed is not None:
        random.Random(order_seed).shuffle(combos)
    best = None
    for sel in combos:
        renamed = [t for s, t in sel if inst.sitemap[s].kind.is_rename]
        if len(set(renamed)) != len(renamed):
            continue
        key = (selection_loss(inst, sel), sel)
        if best is None or key < best:
            best = key
    return best[0], list(best[1])
