"""Command-line entry point: ``advprog <command> [flags]``.

Every command writes its declared outputs to files; stdout carries only
progress.  Reports start with one header line holding the fully resolved
configuration, the package version and a hash of both.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import summarizer as sm
from .attack.driver import OPTIMIZERS, AttackConfig
from .harness import (
    EvalReport, ablate_transforms, adversarial_train, attack_corpus, build_vocab, held_out_corpus,
    metrics_row, sweep, train_on,
)
from .minilang.corpus import CorpusConfig, generate_corpus, read_jsonl, write_jsonl
from .minilang.vocab import Vocabulary

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- option table ------------------------------------------------------------------
# name -> (type, default, help)

_TRAIN = {
    "epochs": (int, sm.TrainConfig.epochs, "training epochs"),
    "batch": (int, sm.TrainConfig.batch, "minibatch size"),
    "lr": (float, sm.TrainConfig.lr, "learning rate"),
    "d": (int, sm.TrainConfig.d, "embedding width"),
    "h": (int, sm.TrainConfig.h, "hidden width"),
    "L": (int, sm.TrainConfig.L, "output name length"),
}

_ATTACK = {
    "optimizer": (str, "ao_rs", f"one of {', '.join(OPTIMIZERS)}"),
    "k": (int, 1, "perturbation strength (sites)"),
    "iters": (int, None, "outer iterations (default depends on the optimizer)"),
    "alpha_z": (float, AttackConfig.alpha_z, "site step size"),
    "alpha_u": (float, AttackConfig.alpha_u, "token step size"),
    "z_steps": (int, AttackConfig.z_steps, "site steps per AO iteration"),
    "u_steps": (int, AttackConfig.u_steps, "token steps per AO iteration"),
    "mu_s": (float, AttackConfig.mu_s, "smoothing radius"),
    "m": (int, AttackConfig.m, "smoothing samples"),
    "draws": (int, AttackConfig.draws, "randomized discretization draws"),
    "restarts": (int, AttackConfig.restarts, "random restarts"),
    "discretization": (str, AttackConfig.discretization, "randomized or argmax"),
    "exclude": (str, "", "comma-separated transform kinds to drop"),
    "jobs": (int, 1, "worker processes (results do not depend on it)"),
}

_MODEL_IN = {
    "corpus": (str, None, "input corpus (JSONL)"),
    "vocab": (str, None, "vocabulary JSON"),
    "checkpoint": (str, None, "model checkpoint JSON"),
}

COMMANDS = {
    "gen": {
        "count": (int, 500, "number of programs"),
        "out": (str, None, "output corpus (JSONL)"),
        "exclude_corpus": (str, None, "draw programs not present in this corpus (held-out split)"),
        "start_id": (int, None, "first program id"),
    },
    "train": {
        "corpus": (str, None, "training corpus (JSONL)"),
        "vocab_out": (str, None, "vocabulary to write"),
        "out": (str, None, "checkpoint to write"),
        **_TRAIN,
    },
    "attack": {**_MODEL_IN, **_ATTACK, "report": (str, None, "report to write (JSONL)"),
               "limit": (int, None, "attack only the first N programs")},
    "eval": {**_MODEL_IN, **_ATTACK, "report": (str, None, "report to write (JSONL)"),
             "table": (str, None, "optional plain-text table"),
             "limit": (int, None, "evaluate only the first N programs")},
    "sweep": {**_MODEL_IN, **{k: v for k, v in _ATTACK.items() if k not in ("optimizer", "k", "iters")},
              "optimizers": (str, "random,ao,ao_rs", "comma-separated optimizers"),
              "k": (str, "1,5", "comma-separated k values"),
              "iters": (str, "", "comma-separated iteration counts (empty: optimizer defaults)"),
              "report": (str, None, "report to write (JSONL)"),
              "table": (str, None, "optional plain-text table"),
              "limit": (int, None, "use only the first N programs")},
    "advtrain": {**_MODEL_IN, **_ATTACK, **_TRAIN,
                 "epochs": (int, 20, "fine-tuning epochs"),
                 "fraction": (float, 0.5, "attacked share of each minibatch"),
                 "out": (str, None, "checkpoint to write")},
}

REQUIRED = {
    "gen": ("out",),
    "train": ("corpus", "vocab_out", "out"),
    "attack": ("corpus", "vocab", "checkpoint", "report"),
    "eval": ("corpus", "vocab", "checkpoint", "report"),
    "sweep": ("corpus", "vocab", "checkpoint", "report"),
    "advtrain": ("corpus", "vocab", "checkpoint", "out"),
}
INPUTS = ("corpus", "vocab", "checkpoint", "exclude_corpus")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="advprog", description="Adversarial program perturbation toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name, options in COMMANDS.items():
        p = subs.add_parser(name, help=f"run {name}")
        p.add_argument("--config", help="JSON file of option values (flags override it)")
        p.add_argument("--seed", type=int, help="global seed (default 0)")
        for opt, (typ, _, text) in options.items():
            flags = [f"--{opt}"]
            if "_" in opt:
                flags.append(f"--{opt.replace('_', '-')}")
            p.add_argument(*flags, dest=opt, type=typ, default=None, help=text)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults < ``--config`` file < explicit flags."""
    options = COMMANDS[args.command]
    cfg = {"seed": 0, **{k: v[1] for k, v in options.items()}}
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            cfg[key] = value
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    missing = [k for k in REQUIRED[args.command] if not cfg.get(k)]
    if missing:
        raise UsageError(f"{args.command}: missing required " + ", ".join(f"--{m.replace('_', '-')}"
                                                                              for m in missing))
    for key in INPUTS:
        if cfg.get(key) and not Path(cfg[key]).is_file():
            raise UsageError(f"--{key.replace('_', '-')}: no such file {cfg[key]}")
    if cfg.get("jobs") is not None and cfg["jobs"] < 1:
        raise UsageError("--jobs must be >= 1")
    return {"command": args.command, **cfg}


def config_hash(cfg: dict) -> str:
    blob = json.dumps({"version": __version__, "config": cfg}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# execution details that cannot change any result stay out of the header
NON_SEMANTIC = ("jobs", "report", "table", "out", "vocab_out")


def header(cfg: dict) -> dict:
    semantic = {k: v for k, v in cfg.items() if k not in NON_SEMANTIC}
    return {"config": semantic, "version": __version__, "config_hash": config_hash(semantic)}


def _write_lines(path, objects) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def _split(text, cast):
    if isinstance(text, (list, tuple)):
        return [cast(x) for x in text]
    return [cast(x) for x in str(text).split(",") if x.strip()]


def _attack_config(cfg: dict, **override) -> AttackConfig:
    values = dict(
        optimizer=cfg.get("optimizer", "ao_rs"), k=cfg.get("k", 1), iterations=cfg.get("iters"),
        alpha_z=cfg["alpha_z"], alpha_u=cfg["alpha_u"], z_steps=cfg["z_steps"], u_steps=cfg["u_steps"],
        mu_s=cfg["mu_s"], m=cfg["m"], draws=cfg["draws"], restarts=cfg["restarts"],
        discretization=cfg["discretization"], seed=cfg["seed"], exclude=tuple(_split(cfg["exclude"], str)),
    )
    values.update(override)
    try:
        return AttackConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _train_config(cfg: dict) -> sm.TrainConfig:
    return sm.TrainConfig(epochs=cfg["epochs"], batch=cfg["batch"], lr=cfg["lr"], seed=cfg["seed"],
                          d=cfg["d"], h=cfg["h"], L=cfg["L"])


def _load(cfg: dict):
    entries = read_jsonl(cfg["corpus"])
    if cfg.get("limit") is not None:
        entries = entries[: cfg["limit"]]
    vocab = Vocabulary.load(cfg["vocab"])
    model = sm.load(cfg["checkpoint"])
    if model.vocab_size != len(vocab):
        raise sm.DimensionMismatch("checkpoint and vocabulary sizes differ")
    return entries, vocab, model


def _progress(msg: str) -> None:
    print(msg, flush=True)


# -- commands ------------------------------------------------------------------------


def cmd_gen(cfg: dict) -> None:
    if cfg["count"] < 1:
        raise UsageError("--count must be >= 1")
    if cfg["exclude_corpus"]:
        entries = held_out_corpus(read_jsonl(cfg["exclude_corpus"]), cfg["count"], cfg["seed"], cfg["start_id"])
    else:
        entries = generate_corpus(CorpusConfig(count=cfg["count"], seed=cfg["seed"],
                                               start_id=cfg["start_id"] or 0))
    write_jsonl(entries, cfg["out"])
    _progress(f"wrote {len(entries)} programs to {cfg['out']}")


def cmd_train(cfg: dict) -> None:
    entries = read_jsonl(cfg["corpus"])
    vocab = build_vocab(entries)
    tcfg = _train_config(cfg)
    model = train_on(entries, vocab, tcfg)
    vocab.save(cfg["vocab_out"])
    sm.save(model, cfg["out"])
    programs = [vocab.encode_source(e.source) for e in entries]
    targets = np.array([model.encode_target(e.name_subtokens) for e in entries])
    _progress(f"train accuracy {sm.accuracy(model, programs, targets):.4f}; wrote {cfg['out']}")


def cmd_attack(cfg: dict) -> None:
    entries, vocab, model = _load(cfg)
    acfg = _attack_config(cfg)
    results = attack_corpus(model, vocab, entries, acfg, cfg["jobs"])
    _write_lines(cfg["report"], [header(cfg)] + [r.to_report() for r in results])
    _progress(f"attacked {len(results)} programs; wrote {cfg['report']}")


def _write_eval(cfg: dict, report: EvalReport) -> None:
    _write_lines(cfg["report"], [header(cfg), report.to_json()])
    if cfg.get("table"):
        Path(cfg["table"]).write_text(report.to_table(), encoding="utf-8")
    _progress(report.to_table())


def cmd_eval(cfg: dict) -> None:
    entries, vocab, model = _load(cfg)
    acfg = _attack_config(cfg)
    if acfg.exclude:
        report = ablate_transforms(model, vocab, entries, acfg.exclude, acfg, cfg["jobs"])
    else:
        results = attack_corpus(model, vocab, entries, acfg, cfg["jobs"])
        row = metrics_row(acfg.optimizer, acfg.k, acfg.iterations, results)
        report = EvalReport([row], {"base": acfg.to_json(), "programs": len(entries)})
    _write_eval(cfg, report)


def cmd_sweep(cfg: dict) -> None:
    entries, vocab, model = _load(cfg)
    try:
        methods = _split(cfg["optimizers"], str)
        ks = _split(cfg["k"], int)
        iters = _split(cfg["iters"], int) or [None]
    except ValueError as exc:
        raise UsageError(f"bad list value: {exc}") from exc
    bad = [m for m in methods if m not in OPTIMIZERS]
    if bad or not methods or not ks:
        raise UsageError(f"optimizers must be drawn from {OPTIMIZERS} and k must be non-empty")
    base = _attack_config(cfg, optimizer="ao", k=1, iterations=None)
    _write_eval(cfg, sweep(model, vocab, entries, methods, ks, iters, base, cfg["jobs"]))


def cmd_advtrain(cfg: dict) -> None:
    entries, vocab, model = _load(cfg)
    acfg = _attack_config(cfg)
    if not 0.0 <= cfg["fraction"] <= 1.0:
        raise UsageError("--fraction must lie in [0, 1]")
    result = adversarial_train(entries, vocab, model, acfg, _train_config(cfg), cfg["fraction"])
    sm.save(result.model, cfg["out"])
    _progress(f"adversarially trained for {cfg['epochs']} epochs; wrote {cfg['out']}")


HANDLERS = {"gen": cmd_gen, "train": cmd_train, "attack": cmd_attack, "eval": cmd_eval,
            "sweep": cmd_sweep, "advtrain": cmd_advtrain}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("advprog: a command is required (" + ", ".join(COMMANDS) + ")")
        cfg = resolve(args)
        HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
