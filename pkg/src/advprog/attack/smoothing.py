"""Monte Carlo randomized smoothing of the attack loss over ``u``."""
from __future__ import annotations

import numpy as np


def unit_ball(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """``count`` points drawn uniformly from the unit ball in ``R^dim``."""
    x = rng.standard_normal((count, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.random(count)[:, None] ** (1.0 / dim)


def smooth_loss_grad(objective, zs, us, mu_s: float, m: int, rng: np.random.Generator,
                     perturb_z: bool = False):
    """Average loss and gradients over ``m`` copies ``u + mu_s * tau``.

    ``tau`` is uniform in the unit ball of the candidate coordinates of
    ``us``; with ``perturb_z`` the ball also covers ``zs``.
    """
    if mu_s <= 0:
        raise ValueError("mu_s must be positive")
    if m < 1:
        raise ValueError("m must be >= 1")
    masks = objective.layout.masks
    du = int(masks.sum())
    dim = du + (len(zs) if perturb_z else 0)
    taus = unit_ball(rng, dim, m) * mu_s
    total = 0.0
    gz = np.zeros_like(zs, dtype=np.float64)
    gu = np.zeros_like(us, dtype=np.float64)
    for tau in taus:
        u_j = us.copy()
        u_j[masks] += tau[:du]
        z_j = zs + tau[du:] if perturb_z else zs
        val, a, b = objective.value_grad(z_j, u_j)
        total += val
        gz += a
        gu += b
    return total / m, gz / m, gu / m
