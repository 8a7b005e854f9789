"""Map a relaxed ``(zs, us)`` point to a concrete site/token selection."""
from __future__ import annotations

import numpy as np

from .relaxed import SlotLayout


class MaskExhausted(ValueError):
    pass


def _order(zs, sites):
    # descending z, ties by site index
    return sorted(sites, key=lambda s: (-zs[s], s))


def _pick_tokens(layout: SlotLayout, us, sites, rng, mode):
    used: set[int] = set()
    out = []
    for s in sites:
        cand = layout.masks[s].copy()
        if layout.rename[s]:
            for t in used:
                cand[t] = False
        if not cand.any():
            raise MaskExhausted(f"no distinct candidate left for site {s}")
        w = np.where(cand, np.maximum(us[s], 0.0), 0.0)
        if mode == "argmax":
            # greedy: best remaining weight, lowest id on ties
            tok = int(np.flatnonzero(cand)[np.argmax(w[cand])])
        else:
            total = w.sum()
            if total <= 0.0:
                w, total = cand.astype(np.float64), float(cand.sum())
            tok = int(rng.choice(len(w), p=w / total))
        if layout.rename[s]:
            used.add(tok)
        out.append((int(s), tok))
    return sorted(out)


def draw(layout: SlotLayout, zs, us, k: int, rng: np.random.Generator):
    """One randomized selection: Bernoulli sites, categorical tokens."""
    if k <= 0:
        return []
    hits = np.flatnonzero(rng.random(len(zs)) < zs)
    sites = _order(zs, hits.tolist())[:k]
    return _pick_tokens(layout, us, sites, rng, "randomized")


def argmax_selection(layout: SlotLayout, zs, us, k: int):
    if k <= 0:
        return []
    sites = [s for s in _order(zs, range(len(zs))) if zs[s] > 0.0][:k]
    return _pick_tokens(layout, us, sites, None, "argmax")


def discretize(layout: SlotLayout, zs, us, k: int, mode: str = "randomized", draws: int = 10,
               rng: np.random.Generator | None = None, score=None):
    """Best selection under ``score`` (lower is a stronger attack).

    ``score`` maps model-facing ids to a loss; randomized mode keeps the
    best of ``draws`` samples (the first one on ties).  Returns
    ``(selection, loss)``; ``loss`` is ``None`` without ``score``.
    """
    if mode == "argmax":
        sel = argmax_selection(layout, zs, us, k)
        return sel, (score(layout.vertex_ids(sel)) if score else None)
    if mode != "randomized":
        raise ValueError(f"unknown discretization mode {mode!r}")
    if rng is None:
        raise ValueError("randomized discretization needs an rng")
    best, best_loss = None, None
    for _ in range(max(1, draws)):
        sel = draw(layout, zs, us, k, rng)
        if score is None:
            return sel, None
        val = score(layout.vertex_ids(sel))
        if best_loss is None or val < best_loss:
            best, best_loss = sel, val
    return best, best_loss
