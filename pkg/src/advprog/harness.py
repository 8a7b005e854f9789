"""Metrics, attack sweeps, transform ablations and adversarial training."""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import summarizer as sm
from .attack.driver import AttackConfig, AttackResult, attack
from .minilang.corpus import CorpusConfig, CorpusEntry, generate_corpus, replacement_pool
from .minilang.sites import TransformKind
from .minilang.vocab import Vocabulary, build_vocabulary

F1_NOTE = "F1: micro-averaged over non-PAD target positions of fully-correct samples"


class EmptyDenominator(ValueError):
    pass


def _fields(r):
    if isinstance(r, AttackResult):
        return list(r.orig_pred), list(r.pert_pred), list(r.target)
    return list(r["orig_pred"]), list(r["pert_pred"]), list(r["target"])


def _fully_correct(orig, target) -> bool:
    return orig == target


@dataclass
class Counts:
    flipped: int = 0  # originally-correct tokens changed by the perturbation
    correct: int = 0  # originally-correct tokens on fully-correct samples
    tp: int = 0
    fp: int = 0
    fn: int = 0
    fixed: int = 0  # originally-wrong tokens that became correct
    wrong: int = 0
    samples: int = 0  # fully-correct samples
    programs: int = 0


def tally(results) -> Counts:
    c = Counts()
    for r in results:
        orig, pert, target = _fields(r)
        c.programs += 1
        for o, p, t in zip(orig, pert, target):
            if t != sm.PAD and o != t:
                c.wrong += 1
                c.fixed += p == t
        if not _fully_correct(orig, target):
            continue
        c.samples += 1
        for p, t in zip(pert, target):
            if t == sm.PAD:
                continue
            c.correct += 1
            if p == t:
                c.tp += 1
            else:
                c.flipped += 1
                c.fn += 1
                c.fp += p != sm.PAD
    return c


def asr(results) -> float:
    """Percent of originally-correct output tokens flipped (fully-correct samples only)."""
    c = results if isinstance(results, Counts) else tally(results)
    if c.correct == 0:
        raise EmptyDenominator("no correctly classified tokens")
    return 100.0 * c.flipped / c.correct


def f1(results) -> float:
    c = results if isinstance(results, Counts) else tally(results)
    if c.correct == 0:
        raise EmptyDenominator("no correctly classified tokens")
    denom = 2 * c.tp + c.fp + c.fn
    return 100.0 * 2 * c.tp / denom


def fpr(results) -> float:
    """Fraction (not percent) of originally-wrong tokens the perturbation made correct."""
    c = results if isinstance(results, Counts) else tally(results)
    if c.wrong == 0:
        raise EmptyDenominator("no originally misclassified tokens")
    return c.fixed / c.wrong


def _maybe(fn, c):
    try:
        return fn(c)
    except EmptyDenominator:
        return None


# -- batch attacks -------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(model, vocab):
    _WORKER["model"] = model
    _WORKER["vocab"] = vocab


def _attack_one(args):
    entry, config = args
    return attack(_WORKER["model"], _WORKER["vocab"], entry, config)


def attack_corpus(model: sm.SummarizerModel, vocab: Vocabulary, entries, config: AttackConfig,
                  jobs: int = 1) -> list[AttackResult]:
    """Attack every entry; per-program seeding makes ``jobs`` irrelevant to results."""
    entries = list(entries)
    if jobs <= 1 or len(entries) < 2:
        return [attack(model, vocab, e, config) for e in entries]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(model, vocab)) as ex:
        return list(ex.map(_attack_one, [(e, config) for e in entries], chunksize=8))


# -- reports ---------------------------------------------------------------------


@dataclass
class EvalReport:
    rows: list
    config: dict
    diagnostics: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def row(self, method: str, k: int, iterations: int | None = None) -> dict:
        for r in self.rows:
            if r["method"] == method and r["k"] == k and (iterations is None or r["iterations"] == iterations):
                return r
        raise KeyError((method, k, iterations))

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "version": __version__,
            "config": self.config,
            "notes": [F1_NOTE, "FPR is a fraction in [0, 1]; ASR and F1 are percentages"],
            "rows": self.rows,
            "diagnostics": self.diagnostics,
        }
        if timing:
            out["wall_clock"] = self.wall_clock
        return out

    def to_table(self) -> str:
        head = ("method", "k", "iters", "ASR", "F1", "FPR", "samples", "tokens")
        body = []
        for r in self.rows:
            body.append((
                r["method"], str(r["k"]), str(r["iterations"]),
                _fmt(r["asr"]), _fmt(r["f1"]), _fmt(r["fpr"], 4),
                str(r["samples"]), str(r["tokens"]),
            ))
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for b in body:
            lines.append("  ".join(v.rjust(w) if i else v.ljust(w) for i, (v, w) in enumerate(zip(b, widths))))
        return "\n".join(lines) + "\n# " + F1_NOTE + "\n"


def _fmt(x, digits=2):
    return "n/a" if x is None else f"{x:.{digits}f}"


def metrics_row(method: str, k: int, iterations: int, results) -> dict:
    c = tally(results)
    return {
        "method": method,
        "k": k,
        "iterations": iterations,
        "asr": _maybe(asr, c),
        "f1": _maybe(f1, c),
        "fpr": _maybe(fpr, c),
        "samples": c.samples,
        "tokens": c.correct,
        "wrong_tokens": c.wrong,
        "programs": c.programs,
    }


def sweep(model, vocab, corpus, methods, ks, iterations=(None,), base: AttackConfig | None = None,
          jobs: int = 1) -> EvalReport:
    """Full factorial over methods x k x iterations (``None`` = method default)."""
    base = base or AttackConfig()
    start = time.perf_counter()
    rows = []
    for method in methods:
        for it in iterations:
            for k in ks:
                cfg = base.replace(optimizer=method, k=int(k), iterations=it)
                rows.append(metrics_row(method, int(k), cfg.iterations,
                                        attack_corpus(model, vocab, corpus, cfg, jobs)))
    diag = {}
    for method in methods:
        for it in sorted({r["iterations"] for r in rows if r["method"] == method}):
            series = [r["asr"] for r in sorted((r for r in rows if r["method"] == method
                                                and r["iterations"] == it), key=lambda r: r["k"])]
            vals = [v for v in series if v is not None]
            diag[f"{method}@{it}:asr_monotone_in_k"] = all(a <= b for a, b in zip(vals, vals[1:]))
    config = {"methods": list(methods), "ks": [int(k) for k in ks], "iterations": list(iterations),
              "base": base.to_json(), "programs": len(corpus)}
    return EvalReport(rows, config, diag, time.perf_counter() - start)


def ablate_transforms(model, vocab, corpus, excluded, config: AttackConfig | None = None,
                      jobs: int = 1) -> EvalReport:
    """Same pipeline with sites of the ``excluded`` transform kinds removed."""
    config = config or AttackConfig()
    kinds = tuple(sorted(TransformKind.parse(x).value if isinstance(x, str) else x.value for x in excluded))
    cfg = config.replace(exclude=kinds)
    start = time.perf_counter()
    row = metrics_row(cfg.optimizer, cfg.k, cfg.iterations, attack_corpus(model, vocab, corpus, cfg, jobs))
    row["excluded"] = list(kinds)
    return EvalReport([row], {"excluded": list(kinds), "base": cfg.to_json(), "programs": len(corpus)},
                      {}, time.perf_counter() - start)


# -- adversarial training --------------------------------------------------------


def adversarial_train(entries, vocab: Vocabulary, model: sm.SummarizerModel, attack_config: AttackConfig,
                      train_cfg: sm.TrainConfig, fraction: float = 0.5) -> sm.TrainResult:
    """Continue training ``model`` with a ``fraction`` of each minibatch attacked.

    The attack runs against the current parameters right before each step.
    ``fraction == 0`` is exactly plain continued training.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    entries = list(entries)
    programs = [vocab.encode_source(e.source) for e in entries]
    targets = np.array([model.encode_target(e.name_subtokens) for e in entries])

    def augment(current, idx, epoch, rng):
        count = int(round(fraction * len(idx)))
        if count == 0:
            return {}
        chosen = rng.choice(idx, size=count, replace=False)
        out = {}
        for i in sorted(int(x) for x in chosen):
            cfg = attack_config.replace(seed=int(rng.integers(2**31)))
            res = attack(current, vocab, entries[i], cfg)
            out[i] = vocab.encode_source(res.perturbed_source)
        return out

    return sm.train(programs, targets, model.vocab_size, model.output_tokens, train_cfg,
                    augment if fraction > 0 else None, init=model)


# -- toy pipeline ----------------------------------------------------------------


@dataclass
class Pipeline:
    vocab: Vocabulary
    model: sm.SummarizerModel
    train: list
    test: list
    train_accuracy: float
    test_accuracy: float


def held_out_corpus(train, count: int, seed: int, start_id: int | None = None) -> list[CorpusEntry]:
    """``count`` fresh generator programs whose sources do not occur in ``train``."""
    seen = {e.source for e in train}
    start = len(train) if start_id is None else start_id
    out: list[CorpusEntry] = []
    batch = count
    while len(out) < count:
        batch *= 2
        cand = generate_corpus(CorpusConfig(count=batch, seed=seed))
        out = [e for e in cand if e.source not in seen][:count]
        if batch > 64 * count:
            raise RuntimeError("cannot draw enough held-out programs")
    return [CorpusEntry(start + i, e.source, e.name_subtokens) for i, e in enumerate(out)]


def build_vocab(entries) -> Vocabulary:
    return build_vocabulary([e.source for e in entries], replacement_pool())


def train_on(entries, vocab: Vocabulary, cfg: sm.TrainConfig = sm.TrainConfig()) -> sm.SummarizerModel:
    outs = sm.output_vocabulary([e.name_subtokens for e in entries])
    probe = sm.init_model(len(vocab), outs, d=1, h=1, L=cfg.L)
    programs = [vocab.encode_source(e.source) for e in entries]
    targets = np.array([probe.encode_target(e.name_subtokens) for e in entries])
    return sm.train(programs, targets, len(vocab), outs, cfg).model


def corpus_accuracy(model, vocab, entries) -> float:
    programs = [vocab.encode_source(e.source) for e in entries]
    targets = np.array([model.encode_target(e.name_subtokens) for e in entries])
    return sm.accuracy(model, programs, targets)


def toy_pipeline(count: int = 500, seed: int = 0, test_count: int = 500,
                 train_cfg: sm.TrainConfig = sm.TrainConfig()) -> Pipeline:
    """Generated corpus, vocabulary, trained summarizer and a held-out split."""
    train = generate_corpus(CorpusConfig(count=count, seed=seed))
    test = held_out_corpus(train, test_count, seed + 1)
    vocab = build_vocab(train)
    model = train_on(train, vocab, train_cfg)
    return Pipeline(vocab, model, train, test, corpus_accuracy(model, vocab, train),
                    corpus_accuracy(model, vocab, test))


def default_jobs() -> int:
    return max(1, min(4, os.cpu_count() or 1))
