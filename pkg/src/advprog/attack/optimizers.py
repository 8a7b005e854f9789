"""Projected-gradient optimizers over the compact ``(zs, us)`` variables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .projection import project_rows, project_sites
from .smoothing import smooth_loss_grad


@dataclass
class OptState:
    zs: np.ndarray
    us: np.ndarray
    trace: list = field(default_factory=list)


def _scaled(g, normalize: bool):
    """Raw gradient, or rescaled to unit max-norm (per row for matrices)."""
    if not normalize:
        return g
    top = np.abs(g).max(axis=-1, keepdims=True)
    return np.divide(g, top, out=np.zeros_like(g), where=top > 0)


def _gradient_fn(objective, cfg, rng):
    if not cfg.smoothed:
        return objective.value_grad
    return lambda zs, us: smooth_loss_grad(objective, zs, us, cfg.mu_s, cfg.m, rng, cfg.smooth_z)


def run_jo(objective, zs, us, k: int, cfg, rng=None) -> OptState:
    """Simultaneous projected steps on ``zs`` and ``us``."""
    grad = _gradient_fn(objective, cfg, rng)
    masks = objective.layout.masks
    zs, us = zs.copy(), us.copy()
    trace = []
    for _ in range(cfg.iterations):
        _, gz, gu = grad(zs, us)
        zs = project_sites(zs - cfg.alpha_z * _scaled(gz, cfg.normalize), k)
        us = project_rows(us - cfg.alpha_u * _scaled(gu, cfg.normalize), masks)
        trace.append(objective.value(zs, us))
    return OptState(zs, us, trace)


def run_ao(objective, zs, us, k: int, cfg, rng=None) -> OptState:
    """Alternate ``z_steps`` steps on ``zs`` (u fixed) and ``u_steps`` on ``us``."""
    grad = _gradient_fn(objective, cfg, rng)
    masks = objective.layout.masks
    zs, us = zs.copy(), us.copy()
    trace = []
    def z_block(zs, us):
        for _ in range(cfg.z_steps):
            _, gz, _ = grad(zs, us)
            zs = project_sites(zs - cfg.alpha_z * _scaled(gz, cfg.normalize), k)
        return zs

    def u_block(zs, us):
        for _ in range(cfg.u_steps):
            _, _, gu = grad(zs, us)
            us = project_rows(us - cfg.alpha_u * _scaled(gu, cfg.normalize), masks)
        return us

    for _ in range(cfg.iterations):
        if cfg.u_first:
            us = u_block(zs, us)
            zs = z_block(zs, us)
        else:
            zs = z_block(zs, us)
            us = u_block(zs, us)
        trace.append(objective.value(zs, us))
    return OptState(zs, us, trace)


def run_token_only(objective, zs, us, k: int, cfg, rng=None) -> OptState:
    """Optimize ``us`` only with ``zs`` held fixed (``u_steps`` per iteration)."""
    grad = _gradient_fn(objective, cfg, rng)
    masks = objective.layout.masks
    us = us.copy()
    trace = []
    steps = max(1, cfg.u_steps)
    for _ in range(cfg.iterations):
        for _ in range(steps):
            _, _, gu = grad(zs, us)
            us = project_rows(us - cfg.alpha_u * _scaled(gu, cfg.normalize), masks)
        trace.append(objective.value(zs, us))
    return OptState(zs.copy(), us, trace)
