"""Pure-numpy projection kernels (fallback for the compiled ``_kernels``).

Both kernels solve a Euclidean projection by bisecting on the scalar
multiplier of the single coupling constraint and then snapping the root onto
the exact value implied by the active set at the bracket.
"""
import math

import numpy as np

FTOL = 1e-10
XTOL = 1e-10


def max_bisection_steps(width: float, xtol: float = XTOL) -> int:
    if width <= xtol:
        return 0
    return int(math.ceil(math.log2(width / xtol)))


def _capped_sum(v, tau):
    return np.clip(v - tau, 0.0, 1.0).sum()


def capped_box(v, k, ftol=FTOL, xtol=XTOL):
    """Project ``v`` onto ``{x in [0,1]^n : sum(x) <= k}``.

    Returns ``(x, tau, iterations, residual)``; ``tau == 0`` and
    ``iterations == 0`` when the box clip already satisfies the budget.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    if k <= 0:
        return np.zeros_like(v), float(v.max(initial=0.0)), 0, 0.0
    clipped = np.clip(v, 0.0, 1.0)
    if clipped.sum() <= k:
        return clipped, 0.0, 0, 0.0
    lo, hi = 0.0, float(v.max())
    steps = max_bisection_steps(hi - lo, xtol)
    tau = 0.5 * (lo + hi)
    r = _capped_sum(v, tau) - k
    iters = 0
    for iters in range(1, steps + 1):
        tau = 0.5 * (lo + hi)
        r = _capped_sum(v, tau) - k
        if abs(r) <= ftol:
            break
        if r > 0:
            lo = tau
        else:
            hi = tau
    shifted = v - tau
    free = (shifted > 0.0) & (shifted < 1.0)
    nfree = int(free.sum())
    if nfree:
        snapped = (np.count_nonzero(shifted >= 1.0) + v[free].sum() - k) / nfree
        r2 = _capped_sum(v, snapped) - k
        if abs(r2) < abs(r):
            tau, r = snapped, r2
    x = np.clip(v - tau, 0.0, 1.0)
    return x, float(tau), iters, float(abs(x.sum() - k))


def simplex_rows(V, mask, ftol=FTOL, xtol=XTOL):
    """Project each row of ``V`` (restricted to ``mask``) onto the simplex.

    Returns ``(U, mu, iterations, residual)`` with one entry per row; off-mask
    coordinates of ``U`` are zero.
    """
    V = np.ascontiguousarray(V, dtype=np.float64)
    mask = np.ascontiguousarray(mask, dtype=bool)
    S = V.shape[0]
    W = np.where(mask, V, -np.inf)
    top = W.max(axis=1)
    lo = top - 1.0
    hi = top.copy()
    steps = max_bisection_steps(1.0, xtol)
    mu = 0.5 * (lo + hi)
    r = np.maximum(W - mu[:, None], 0.0).sum(axis=1) - 1.0
    iters = np.zeros(S, dtype=np.int64)
    active = np.ones(S, dtype=bool)
    for _ in range(steps):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        rm = np.maximum(W - mid[:, None], 0.0).sum(axis=1) - 1.0
        mu = np.where(active, mid, mu)
        r = np.where(active, rm, r)
        iters += active
        done = np.abs(rm) <= ftol
        up = active & ~done & (rm > 0)
        down = active & ~done & (rm <= 0)
        lo = np.where(up, mid, lo)
        hi = np.where(down, mid, hi)
        active &= ~done
    free = W > mu[:, None]
    nfree = free.sum(axis=1)
    sums = np.where(free, W, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        snapped = np.where(nfree > 0, (sums - 1.0) / np.maximum(nfree, 1), mu)
    r2 = np.maximum(W - snapped[:, None], 0.0).sum(axis=1) - 1.0
    better = np.abs(r2) < np.abs(r)
    mu = np.where(better, snapped, mu)
    U = np.maximum(W - mu[:, None], 0.0)
    residual = np.abs(U.sum(axis=1) - 1.0)
    return U, mu, iters, residual
