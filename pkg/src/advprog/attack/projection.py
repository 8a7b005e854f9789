"""Euclidean projections onto the two feasible sets of the relaxed attack."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .. import kernels


class ProjectionInfo(NamedTuple):
    root: float  # tau for the capped box, mu for the simplex
    iterations: int
    residual: float  # |constraint(root) - target| after the final root
    bound: int  # ceil(log2(bracket / xtol))


def project_z(v, k, tie_groups=None, info: bool = False):
    """Project ``v`` onto ``{z in [0,1]^n : sum(z) <= k}``.

    With ``tie_groups`` (a list of index arrays) every group is one variable:
    its entries are averaged, the averages are projected, and the result is
    broadcast back; coordinates outside any group are pinned to zero.
    """
    v = np.asarray(v, dtype=np.float64)
    if tie_groups is None:
        reps = v
    else:
        reps = np.array([v[g].mean() for g in tie_groups], dtype=np.float64)
    x, tau, iters, residual = kernels.capped_box(reps, float(k))
    if tie_groups is None:
        z = x
    else:
        z = np.zeros_like(v)
        for g, val in zip(tie_groups, x):
            z[g] = val
    if not info:
        return z
    width = float(reps.max(initial=0.0)) if iters else 0.0
    return z, ProjectionInfo(tau, int(iters), float(residual), kernels.max_bisection_steps(width))


def project_simplex(v, mask=None, info: bool = False):
    """Project the masked coordinates of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    mask = np.ones(v.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty candidate mask")
    U, mu, iters, residual = kernels.simplex_rows(v[None, :], mask[None, :])
    if not info:
        return U[0]
    return U[0], ProjectionInfo(float(mu[0]), int(iters[0]), float(residual[0]), kernels.max_bisection_steps(1.0))


def project_rows(V, masks):
    """Row-wise simplex projection of the compact ``us`` matrix."""
    return kernels.simplex_rows(V, masks)[0]


def project_sites(zs, k):
    return kernels.capped_box(zs, float(k))[0]
