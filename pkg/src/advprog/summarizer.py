"""Bag-of-embeddings program summarizer with hand-derived gradients.

The input is a row matrix over the token vocabulary (one-hot rows for a
concrete program, mixtures for a relaxed one).  Rows are mean-pooled through
the embedding table, passed through one tanh layer and decoded by ``L``
independent softmax heads, one per name subtoken position.

Row mass placed on the ``<nul>`` token counts as absent: its embedding is
pinned at zero and it is left out of the pooling denominator.  One-hot
``<nul>`` rows therefore drop out of the model exactly, which is what lets
template slots of insert transforms be switched on and off by the site
selection variable.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .minilang.vocab import NUL_ID

PAD = "<pad>"


class DimensionMismatch(ValueError):
    pass


class ChecksumMismatch(ValueError):
    pass


@dataclass
class SummarizerModel:
    E: np.ndarray  # (V, d)
    W1: np.ndarray  # (h, d)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (L, C, h)
    b2: np.ndarray  # (L, C)
    output_tokens: tuple[str, ...]

    PARAM_NAMES = ("E", "W1", "b1", "W2", "b2")

    @property
    def vocab_size(self) -> int:
        return self.E.shape[0]

    @property
    def L(self) -> int:
        return self.W2.shape[0]

    @property
    def d(self) -> int:
        return self.E.shape[1]

    @property
    def h(self) -> int:
        return self.W1.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in self.PARAM_NAMES}

    def copy(self) -> "SummarizerModel":
        return SummarizerModel(*(getattr(self, k).copy() for k in self.PARAM_NAMES), self.output_tokens)

    def encode_target(self, subtokens: Sequence[str]) -> np.ndarray:
        """Output ids for ``subtokens`` padded to ``L`` (unknown -> error)."""
        if not 1 <= len(subtokens) <= self.L:
            raise ValueError(f"name must have 1..{self.L} subtokens, got {list(subtokens)}")
        index = {t: i for i, t in enumerate(self.output_tokens)}
        ids = [index[t] for t in subtokens] + [0] * (self.L - len(subtokens))
        return np.array(ids, dtype=np.int64)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SummarizerModel)
            and self.output_tokens == other.output_tokens
            and all(np.array_equal(a, b) for a, b in zip(self.params().values(), other.params().values()))
        )


def init_model(vocab_size: int, output_tokens: Sequence[str], d: int = 32, h: int = 64, L: int = 3,
               seed: int = 0) -> SummarizerModel:
    output_tokens = tuple(output_tokens)
    if output_tokens[0] != PAD:
        raise ValueError(f"output vocabulary must start with {PAD}")
    rng = np.random.default_rng(seed)
    C = len(output_tokens)
    E = rng.uniform(-0.1, 0.1, (vocab_size, d))
    E[NUL_ID] = 0.0
    return SummarizerModel(
        E=E,
        W1=rng.uniform(-0.1, 0.1, (h, d)),
        b1=rng.uniform(-0.1, 0.1, h),
        W2=rng.uniform(-0.1, 0.1, (L, C, h)),
        b2=rng.uniform(-0.1, 0.1, (L, C)),
        output_tokens=output_tokens,
    )


def output_vocabulary(names: Sequence[Sequence[str]]) -> tuple[str, ...]:
    return (PAD,) + tuple(sorted({t for name in names for t in name}))


# -- forward / loss ---------------------------------------------------------


def _check_rows(model: SummarizerModel, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.vocab_size:
        raise DimensionMismatch(
            f"rows must be (n, {model.vocab_size}), got {rows.shape}"
        )
    if rows.shape[0] == 0:
        raise DimensionMismatch("empty program")
    return rows


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def _pool(model, mass, n_rows):
    present = n_rows - mass[..., NUL_ID]
    return (mass @ model.E) / present[..., None], present


def forward_mass(model: SummarizerModel, mass: np.ndarray, n_rows: float) -> np.ndarray:
    """Logits from summed rows ``mass`` (shape ``(V,)``) of an ``n_rows`` program."""
    pooled, _ = _pool(model, mass, n_rows)
    hidden = np.tanh(model.W1 @ pooled + model.b1)
    return model.W2 @ hidden + model.b2


def forward(model: SummarizerModel, rows, check: bool = True) -> np.ndarray:
    """Logits ``(L, C)`` for a row-stochastic ``(n, V)`` matrix."""
    rows = _check_rows(model, rows)
    if check:
        if np.any(rows < -1e-12) or np.any(rows > 1 + 1e-12):
            raise ValueError("row entries must lie in [0, 1]")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("rows must sum to 1")
    return forward_mass(model, rows.sum(axis=0), rows.shape[0])


def forward_ids(model: SummarizerModel, ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    mass = np.bincount(ids, minlength=model.vocab_size).astype(np.float64)
    return forward_mass(model, mass, float(len(ids)))


def loss(logits: np.ndarray, target) -> float:
    """Cross-entropy summed over output positions."""
    target = np.asarray(target, dtype=np.int64)
    lp = log_softmax(np.asarray(logits, dtype=np.float64))
    return float(-lp[np.arange(len(target)), target].sum())


def mass_gradient(model: SummarizerModel, mass: np.ndarray, n_rows: float, target) -> tuple[float, np.ndarray]:
    """Loss and its gradient with respect to every row (all rows share it)."""
    target = np.asarray(target, dtype=np.int64)
    pooled, present = _pool(model, mass, n_rows)
    hidden = np.tanh(model.W1 @ pooled + model.b1)
    logits = model.W2 @ hidden + model.b2
    lp = log_softmax(logits)
    L = len(target)
    value = float(-lp[np.arange(L), target].sum())
    dlogits = np.exp(lp)
    dlogits[np.arange(L), target] -= 1.0
    dhidden = np.einsum("lch,lc->h", model.W2, dlogits)
    dpre = dhidden * (1.0 - hidden**2)
    dpooled = model.W1.T @ dpre
    g = model.E @ dpooled
    g[NUL_ID] += pooled @ dpooled
    return value, g / present


def input_gradient(model: SummarizerModel, rows, target) -> np.ndarray:
    """``d loss / d rows`` as an ``(n, V)`` matrix."""
    rows = _check_rows(model, rows)
    _, g = mass_gradient(model, rows.sum(axis=0), rows.shape[0], target)
    return np.broadcast_to(g, rows.shape).copy()


def predict_ids(model: SummarizerModel, ids) -> np.ndarray:
    return forward_ids(model, ids).argmax(axis=-1)


def predict(model: SummarizerModel, ids) -> list[str]:
    """Per-position argmax subtokens (PAD included)."""
    return [model.output_tokens[i] for i in predict_ids(model, ids)]


# -- training ---------------------------------------------------------------


def count_matrix(programs: Sequence[np.ndarray], vocab_size: int) -> tuple[np.ndarray, np.ndarray]:
    C = np.zeros((len(programs), vocab_size))
    for b, ids in enumerate(programs):
        np.add.at(C[b], np.asarray(ids, dtype=np.int64), 1.0)
    return C, C.sum(axis=1)


def batch_loss_and_grads(model: SummarizerModel, counts: np.ndarray, n_rows: np.ndarray,
                         targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean (over the batch) summed cross-entropy and its parameter gradients."""
    B = counts.shape[0]
    L = model.L
    present = n_rows - counts[:, NUL_ID]
    pooled = (counts @ model.E) / present[:, None]
    hidden = np.tanh(pooled @ model.W1.T + model.b1)
    logits = np.einsum("lch,bh->blc", model.W2, hidden) + model.b2
    lp = log_softmax(logits)
    bi = np.arange(B)[:, None]
    li = np.arange(L)[None, :]
    value = float(-lp[bi, li, targets].sum() / B)
    dlogits = np.exp(lp)
    dlogits[bi, li, targets] -= 1.0
    dlogits /= B
    dW2 = np.einsum("blc,bh->lch", dlogits, hidden)
    db2 = dlogits.sum(axis=0)
    dhidden = np.einsum("lch,blc->bh", model.W2, dlogits)
    dpre = dhidden * (1.0 - hidden**2)
    dW1 = dpre.T @ pooled
    db1 = dpre.sum(axis=0)
    dpooled = dpre @ model.W1
    dE = (counts / present[:, None]).T @ dpooled
    dE[NUL_ID] = 0.0
    return value, {"E": dE, "W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch: int = 32
    lr: float = 1.0
    seed: int = 0
    d: int = 32
    h: int = 64
    L: int = 3


@dataclass
class TrainResult:
    model: SummarizerModel
    loss_trace: list[float] = field(default_factory=list)


# signature: (model, batch indices, epoch, rng) -> {index: replacement ids}
Augmenter = Callable[[SummarizerModel, np.ndarray, int, np.random.Generator], dict]


def train(programs: Sequence[np.ndarray], targets: np.ndarray, vocab_size: int,
          output_tokens: Sequence[str], cfg: TrainConfig = TrainConfig(),
          augment: Augmenter | None = None, init: SummarizerModel | None = None) -> TrainResult:
    """Plain minibatch gradient descent on summed cross-entropy.

    ``augment`` may swap some examples of each minibatch for perturbed
    variants before the gradient step (adversarial training).  ``init``
    continues from a copy of an existing model instead of a fresh one.
    """
    if len(programs) == 0:
        raise ValueError("empty corpus")
    targets = np.asarray(targets, dtype=np.int64)
    if init is None:
        model = init_model(vocab_size, output_tokens, cfg.d, cfg.h, cfg.L, cfg.seed)
    else:
        if init.vocab_size != vocab_size or tuple(init.output_tokens) != tuple(output_tokens):
            raise DimensionMismatch("initial model does not match the vocabularies")
        model = init.copy()
    rng = np.random.default_rng([cfg.seed, 1])
    counts, n_rows = count_matrix(programs, vocab_size)
    trace = []
    N = len(programs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(N)
        total = 0.0
        for start in range(0, N, cfg.batch):
            idx = order[start:start + cfg.batch]
            c, n = counts[idx], n_rows[idx]
            if augment is not None:
                swaps = augment(model, idx, epoch, rng)
                if swaps:
                    c = c.copy()
                    n = n.copy()
                    for j, i in enumerate(idx):
                        if int(i) in swaps:
                            ids = np.asarray(swaps[int(i)], dtype=np.int64)
                            c[j] = np.bincount(ids, minlength=vocab_size)
                            n[j] = len(ids)
            value, grads = batch_loss_and_grads(model, c, n, targets[idx])
            total += value * len(idx)
            for name, g in grads.items():
                getattr(model, name)[...] -= cfg.lr * g
        trace.append(total / N)
    return TrainResult(model, trace)


def accuracy(model: SummarizerModel, programs: Sequence[np.ndarray], targets: np.ndarray) -> float:
    """Per-position accuracy over all ``L`` positions (PAD included)."""
    targets = np.asarray(targets)
    preds = np.array([predict_ids(model, ids) for ids in programs])
    return float((preds == targets).mean())


# -- checkpoints ------------------------------------------------------------


def _canonical(params: dict) -> bytes:
    return json.dumps(params, sort_keys=True, separators=(",", ":")).encode("utf-8")


def checkpoint_json(model: SummarizerModel) -> dict:
    params = {k: v.tolist() for k, v in model.params().items()}
    return {
        "arch": {
            "d": model.d,
            "h": model.h,
            "L": model.L,
            "vocab_size": model.vocab_size,
            "output_size": len(model.output_tokens),
            "output_tokens": list(model.output_tokens),
        },
        "params": params,
        "sha256": hashlib.sha256(_canonical(params)).hexdigest(),
    }


def save(model: SummarizerModel, path) -> None:
    Path(path).write_text(json.dumps(checkpoint_json(model)) + "\n", encoding="utf-8")


def load(path) -> SummarizerModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ChecksumMismatch(f"corrupt checkpoint {path}: {exc}") from exc
    params = data["params"]
    if hashlib.sha256(_canonical(params)).hexdigest() != data.get("sha256"):
        raise ChecksumMismatch(f"checkpoint {path} fails its sha256 check")
    arch = data["arch"]
    arrays = {k: np.array(params[k], dtype=np.float64) for k in SummarizerModel.PARAM_NAMES}
    model = SummarizerModel(**arrays, output_tokens=tuple(arch["output_tokens"]))
    if (model.d, model.h, model.L, model.vocab_size) != (arch["d"], arch["h"], arch["L"], arch["vocab_size"]):
        raise DimensionMismatch("checkpoint arch does not match parameter shapes")
    return model
