"""End-to-end attack on one program: optimize, discretize, materialize."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .. import summarizer as sm
from ..minilang.corpus import CorpusEntry
from ..minilang.parser import parse_source, unparse
from ..minilang.sites import TransformKind, extract_sites
from ..minilang.transforms import materialize
from ..minilang.vocab import Vocabulary
from .discretize import _pick_tokens, discretize
from .objective import Objective
from .optimizers import run_ao, run_jo, run_token_only
from .projection import project_sites
from .relaxed import build_layout, uniform_rows

OPTIMIZERS = ("random", "baseline", "jo", "ao", "jo_rs", "ao_rs")
DEFAULT_ITERS = {"random": 1, "baseline": 3, "jo": 10, "ao": 3, "jo_rs": 10, "ao_rs": 3}


@dataclass(frozen=True)
class AttackConfig:
    optimizer: str = "ao_rs"
    k: int = 1
    iterations: int | None = None  # None: 3 for AO-style, 10 for JO-style
    alpha_z: float = 0.5
    alpha_u: float = 0.5
    normalize: bool = True  # unit max-norm steps; False gives plain PGD
    z_steps: int = 1
    u_steps: int = 10
    u_first: bool = True  # AO solves u before z inside each outer iteration
    mu_s: float = 0.01
    m: int = 10
    smooth_z: bool = False
    discretization: str = "randomized"
    draws: int = 10
    restarts: int = 1
    seed: int = 0
    exclude: tuple = ()

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.iterations is None:
            object.__setattr__(self, "iterations", DEFAULT_ITERS[self.optimizer])
        object.__setattr__(self, "exclude", tuple(sorted(TransformKind.parse(x).value if isinstance(x, str)
                                                         else x.value for x in self.exclude)))
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.z_steps < 0 or self.u_steps < 0 or self.restarts < 1 or self.draws < 1:
            raise ValueError("step, restart and draw counts must be non-negative / positive")
        if self.smoothed and (self.mu_s <= 0 or self.m < 1):
            raise ValueError("smoothing needs mu_s > 0 and m >= 1")
        if self.discretization not in ("randomized", "argmax"):
            raise ValueError("discretization must be 'randomized' or 'argmax'")

    @property
    def smoothed(self) -> bool:
        return self.optimizer.endswith("_rs")

    @property
    def excluded_kinds(self) -> frozenset:
        return frozenset(TransformKind(v) for v in self.exclude)

    def replace(self, **kw) -> "AttackConfig":
        return dataclasses.replace(self, **kw)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["exclude"] = list(self.exclude)
        return d


@dataclass
class AttackResult:
    program_id: int
    optimizer: str
    k: int
    iterations: int
    seed: int
    loss_trace: list
    zs: np.ndarray
    us: np.ndarray
    selection: list  # [(site id, kind value, token text)]
    target: list  # subtokens (PAD included)
    orig_pred: list
    pert_pred: list
    perturbed_source: str
    clean_loss: float
    final_loss: float
    attackable: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def token_success(self) -> list:
        """One flag per originally-correct non-PAD output position."""
        return [p != t for o, p, t in zip(self.orig_pred, self.pert_pred, self.target)
                if t != sm.PAD and o == t]

    @property
    def fully_correct(self) -> bool:
        return list(self.orig_pred) == list(self.target)

    def to_report(self) -> dict:
        return {
            "id": self.program_id,
            "optimizer": self.optimizer,
            "k": self.k,
            "iters": self.iterations,
            "loss_trace": [float(x) for x in self.loss_trace],
            "selection": [{"site": s, "kind": kind, "token": tok} for s, kind, tok in self.selection],
            "orig_pred": list(self.orig_pred),
            "pert_pred": list(self.pert_pred),
            "target": list(self.target),
            "token_success": self.token_success,
            "perturbed_source": self.perturbed_source,
            "attackable": self.attackable,
            "seed": self.seed,
        }


def program_rng(seed: int, program_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(program_id)]))


def program_streams(seed: int, program_id: int):
    """Independent (init, noise, discretization) generators for one program.

    Separate streams keep the site/token draws of a smoothed run paired
    with those of the unsmoothed run on the same seed.
    """
    children = np.random.SeedSequence([int(seed), int(program_id)]).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def _random_feasible(layout, k, rng):
    zs = project_sites(rng.random(layout.n_sites), k)
    w = rng.exponential(size=layout.masks.shape) * layout.masks
    return zs, w / w.sum(axis=1, keepdims=True)


def _random_sites(layout, k, rng):
    zs = np.zeros(layout.n_sites)
    zs[rng.choice(layout.n_sites, size=min(k, layout.n_sites), replace=False)] = 1.0
    return zs


def attack(model: sm.SummarizerModel, vocab: Vocabulary, program, config: AttackConfig,
           target=None, program_id: int | None = None, sitemap=None) -> AttackResult:
    """Attack ``program`` (a source string or ``CorpusEntry``).

    The untargeted goal is to move the prediction away from ``target``
    (subtokens); by default the true name of a corpus entry, otherwise the
    model's clean prediction.  A prepared ``sitemap`` overrides site
    extraction (and ``config.exclude``).
    """
    if isinstance(program, CorpusEntry):
        source = program.source
        if target is None:
            target = program.name_subtokens
        if program_id is None:
            program_id = program.id
    else:
        source = program
    program_id = 0 if program_id is None else int(program_id)
    fn = parse_source(source)
    if sitemap is None:
        sitemap = extract_sites(fn, vocab, exclude=config.excluded_kinds)
    clean_ids = vocab.encode_source(unparse(fn))
    orig = sm.predict(model, clean_ids)
    target_ids = model.encode_target(target) if target is not None else sm.predict_ids(model, clean_ids)
    target_toks = [model.output_tokens[i] for i in target_ids]
    init_rng, noise_rng, disc_rng = program_streams(config.seed, program_id)
    T = config.iterations

    def clean_like(attackable):
        cl = -sm.loss(sm.forward_ids(model, clean_ids), target_ids)
        return AttackResult(program_id, config.optimizer, config.k, T, config.seed, [cl] * T,
                            np.zeros(len(sitemap)), np.zeros((len(sitemap), len(vocab))), [],
                            target_toks, orig, list(orig), unparse(fn), cl, cl, attackable)

    if len(sitemap) == 0:
        return clean_like(False)
    if config.k == 0:
        return clean_like(True)

    layout = build_layout(fn, sitemap, vocab)
    obj = Objective(model, layout, target_ids)
    clean_loss = obj.ids_value(clean_ids)
    k = config.k
    if config.optimizer == "random":
        zs = _random_sites(layout, k, init_rng)
        us = uniform_rows(layout.masks)
        sites = [int(s) for s in np.flatnonzero(zs)]
        sel = _pick_tokens(layout, us, sites, disc_rng, "randomized")
        val = obj.ids_value(layout.vertex_ids(sel))
        best = (val, sel, [val] * T, zs, us)
    else:
        best = None
        for r in range(config.restarts):
            if config.optimizer == "baseline":
                zs0, us0 = _random_sites(layout, k, init_rng), uniform_rows(layout.masks)
                if r:
                    us0 = _random_feasible(layout, k, init_rng)[1]
                state = run_token_only(obj, zs0, us0, k, config, noise_rng)
            else:
                if r == 0:
                    zs0 = np.full(layout.n_sites, min(k / layout.n_sites, 1.0))
                    us0 = uniform_rows(layout.masks)
                else:
                    zs0, us0 = _random_feasible(layout, k, init_rng)
                run = run_ao if config.optimizer.startswith("ao") else run_jo
                state = run(obj, zs0, us0, k, config, noise_rng)
            sel, val = discretize(layout, state.zs, state.us, k, config.discretization,
                                  config.draws, disc_rng, obj.ids_value)
            if best is None or val < best[0]:
                best = (val, sel, state.trace, state.zs, state.us)
    final_loss, sel, trace, zs, us = best
    pert_source = materialize(fn, sitemap, sel, vocab)
    pert_pred = sm.predict(model, vocab.encode_source(pert_source))
    selection = [(s, sitemap[s].kind.value, vocab.tokens[t]) for s, t in sel]
    return AttackResult(program_id, config.optimizer, k, T, config.seed, list(trace), zs, us, selection,
                        target_toks, orig, pert_pred, pert_source, clean_loss, final_loss, True)
