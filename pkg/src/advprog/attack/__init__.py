"""Relaxed program-perturbation attack: state, objective, optimizers, driver."""
from .discretize import MaskExhausted, argmax_selection, discretize, draw
from .driver import OPTIMIZERS, AttackConfig, AttackResult, attack, program_rng
from .objective import Objective, attack_loss, grad_zu
from .optimizers import OptState, run_ao, run_jo, run_token_only
from .projection import ProjectionInfo, project_rows, project_simplex, project_sites, project_z
from .relaxed import NoSites, RelaxedProgram, SlotLayout, build_layout, relax, uniform_rows
from .smoothing import smooth_loss_grad, unit_ball

__all__ = [
    "OPTIMIZERS",
    "AttackConfig",
    "AttackResult",
    "MaskExhausted",
    "NoSites",
    "Objective",
    "OptState",
    "ProjectionInfo",
    "RelaxedProgram",
    "SlotLayout",
    "argmax_selection",
    "attack",
    "attack_loss",
    "build_layout",
    "discretize",
    "draw",
    "grad_zu",
    "program_rng",
    "project_rows",
    "project_simplex",
    "project_sites",
    "project_z",
    "relax",
    "run_ao",
    "run_jo",
    "run_token_only",
    "smooth_loss_grad",
    "unit_ball",
    "uniform_rows",
]
