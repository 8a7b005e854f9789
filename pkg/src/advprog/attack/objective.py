"""Attack loss (negated cross-entropy) and its gradients through the relaxation."""
from __future__ import annotations

import numpy as np

from .. import summarizer as sm
from .relaxed import RelaxedProgram, SlotLayout


class Objective:
    """``loss(zs, us) = -CE(model(P'), target)`` on one program's layout."""

    def __init__(self, model: sm.SummarizerModel, layout: SlotLayout, target):
        if layout.vocab_size != model.vocab_size:
            raise sm.DimensionMismatch(
                f"layout vocabulary {layout.vocab_size} != model vocabulary {model.vocab_size}"
            )
        self.model = model
        self.layout = layout
        self.target = np.asarray(target, dtype=np.int64)
        self.n = float(layout.n)

    def value(self, zs, us) -> float:
        logits = sm.forward_mass(self.model, self.layout.mass(zs, us), self.n)
        return -sm.loss(logits, self.target)

    def value_grad(self, zs, us):
        """Loss with the compact gradients ``(d/dzs, d/dus)``."""
        lay = self.layout
        D = lay.direction(us)
        ce, g = sm.mass_gradient(self.model, lay.clean_mass + zs @ D, self.n, self.target)
        g = -g
        gz = D @ g
        gu = np.where(lay.masks, (zs * lay.nvar)[:, None] * g[None, :], 0.0)
        return -ce, gz, gu

    def ids_value(self, ids) -> float:
        return -sm.loss(sm.forward_ids(self.model, ids), self.target)


def attack_loss(model, relaxed: RelaxedProgram, target) -> float:
    return Objective(model, relaxed.layout, target).value(relaxed.zs, relaxed.us)


def grad_zu(model, relaxed: RelaxedProgram, target):
    """Per-slot gradients ``(dz: (n,), du: (n, V))``.

    Tied slots carry the accumulated gradient of their shared variable;
    slots whose row is fixed (plain tokens, template tokens) get zero.
    """
    lay = relaxed.layout
    _, gz, gu = Objective(model, lay, target).value_grad(relaxed.zs, relaxed.us)
    on = lay.slot_site >= 0
    dz = np.zeros(lay.n)
    dz[on] = gz[lay.slot_site[on]]
    du = np.zeros((lay.n, lay.vocab_size))
    var = lay.slot_var
    du[var] = gu[lay.slot_site[var]]
    return dz, du
