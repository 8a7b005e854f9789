"""Synthetic MiniLang corpus whose function names are predictable from bodies.

A function name is ``<verb>_<noun>[_pair]``.  The verb fixes the statement
skeleton, the noun fixes the arithmetic used inside it, and ``pair`` marks a
two-parameter function.  Local names are drawn partly from verb/noun specific
pools, so identifiers carry a secondary (attackable) signal, the way real
variable names do.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .parser import parse_source
from .interpreter import interpret

VERB_POOLS = {
    "get": ["got", "fetched", "item", "current"],
    "compute": ["result", "calc", "computed", "outcome"],
    "count": ["counter", "cnt", "num", "tally"],
    "check": ["ok", "valid", "flag", "passed"],
    "update": ["changed", "updated", "fresh", "revised"],
    "make": ["label", "text", "title", "msg"],
}
NOUN_POOLS = {
    "sum": ["total", "acc", "summed", "plus"],
    "product": ["prod", "factor", "scaled", "times"],
    "diff": ["delta", "gap", "minus", "sub"],
    "max": ["biggest", "top", "peak", "upper"],
    "min": ["smallest", "least", "low", "lower"],
    "half": ["halved", "mid", "split", "part"],
    "abs": ["magnitude", "size", "pos", "unsigned"],
}
GENERIC_NAMES = ["tmp", "val", "res", "out", "x", "y", "z", "data", "v", "w", "elem", "thing"]
FIELD_NAMES = ["state", "cache", "store", "buffer", "slot", "memo", "held", "kept"]
FIRST_PARAMS = ["a", "n", "first", "num1", "lhs", "arg"]
SECOND_PARAMS = ["b", "m", "second", "num2", "rhs", "other"]
PARAM_NAMES = FIRST_PARAMS + SECOND_PARAMS
FILLER_WORDS = ["hello", "world", "debug", "here", "step", "ping", "trace", "note"]

_SYLLABLES = ["ka", "lo", "mi", "nu", "ri", "so", "te", "va", "xe", "zu", "po", "qi", "da", "fe"]


def neutral_names(count: int = 150, seed: int = 0) -> list[str]:
    """Meaningless identifiers that widen the replacement vocabulary."""
    rng = random.Random(seed)
    names: list[str] = []
    seen = set()
    while len(names) < count:
        name = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if name not in seen:
            seen.add(name)
            names.append(name)
    return names


ARG_DOMAIN = (-20, 20)
SOLO_OPERAND = "7"


@dataclass(frozen=True)
class CorpusEntry:
    id: int
    source: str
    name_subtokens: tuple[str, ...]

    def to_json(self) -> dict:
        return {"id": self.id, "source": self.source, "name_subtokens": list(self.name_subtokens)}

    @classmethod
    def from_json(cls, obj: dict) -> "CorpusEntry":
        return cls(int(obj["id"]), str(obj["source"]), tuple(obj["name_subtokens"]))


@dataclass(frozen=True)
class CorpusConfig:
    count: int = 500
    seed: int = 0
    verbs: tuple[str, ...] = tuple(VERB_POOLS)
    nouns: tuple[str, ...] = tuple(NOUN_POOLS)
    pair_rate: float = 0.5
    name_signal: float = 0.7  # chance a local name comes from a themed pool
    filler_rate: float = 0.85
    max_statements: int = 10
    start_id: int = 0


def _noun_expr(noun: str, a: str, b: str) -> str:
    if noun == "sum":
        return f"{a} + {b}"
    if noun == "product":
        return f"{a} * {b}"
    if noun == "diff":
        return f"{a} - {b}"
    if noun == "max":
        return f"max({a}, {b})"
    if noun == "min":
        return f"min({a}, {b})"
    if noun == "half":
        return f"({a} + {b}) // 2"
    if noun == "abs":
        return f"abs({a} - {b})"
    raise ValueError(noun)


class _Names:
    def __init__(self, rng: random.Random, verb: str, noun: str, signal: float):
        self.rng = rng
        self.verb = verb
        self.noun = noun
        self.signal = signal
        self.used: set[str] = set()

    def _pick(self, pool):
        free = [n for n in pool if n not in self.used]
        name = self.rng.choice(free)
        self.used.add(name)
        return name

    def local(self) -> str:
        r = self.rng.random()
        if r < self.signal * 0.6:
            return self._pick(NOUN_POOLS[self.noun])
        if r < self.signal:
            return self._pick(VERB_POOLS[self.verb])
        return self._pick(GENERIC_NAMES)

    def field(self) -> str:
        return self._pick(FIELD_NAMES)


def _body(rng: random.Random, verb: str, noun: str, params: list[str], names: _Names) -> list[str]:
    p1 = params[0]
    # the single-parameter operand never collides with the constants 0, 1, 2
    b = params[1] if len(params) > 1 else SOLO_OPERAND
    lim = "0"
    if verb == "get":
        f = names.field()
        r = names.local()
        return [f"self.{f} = {p1}", f"{r} = {_noun_expr(noun, f'self.{f}', b)}", f"return {r}"]
    if verb == "compute":
        r = names.local()
        t = names.local()
        return [f"{r} = {_noun_expr(noun, p1, b)}", f"{t} = {r}", f"return {t}"]
    if verb == "count":
        c = names.local()
        return [f"{c} = 0", f"if {_noun_expr(noun, p1, b)} > {lim}: {c} = 1", f"return {c}"]
    if verb == "check":
        r = names.local()
        return [
            f"{r} = {_noun_expr(noun, p1, b)}",
            f"if {r} > {lim}: return True else: return False",
        ]
    if verb == "update":
        f = names.field()
        g = names.field()
        return [f"self.{f} = {_noun_expr(noun, p1, b)}", f"self.{g} = self.{f}", f"return self.{g}"]
    if verb == "make":
        s = names.local()
        r = names.local()
        word = rng.choice(VERB_POOLS["make"])
        return [f'{s} = "{word}"', f"{r} = {_noun_expr(noun, p1, b)}", f"return {s}"]
    raise ValueError(verb)


_FILLER_POOL = FILLER_WORDS + neutral_names()
# parameter names carry no label information
_PARAM_POOL = PARAM_NAMES + neutral_names()


def _filler(rng: random.Random, params: list[str], names: _Names) -> str:
    r = rng.random()
    if r < 0.3:
        return f'print("{rng.choice(_FILLER_POOL)}")'
    if r < 0.8:
        w = rng.choice(_FILLER_POOL)
        return f'if "{w}" != "{w}": _dead = 1'
    return f"{names._pick(GENERIC_NAMES)} = {rng.choice(params)}"


def generate_one(rng: random.Random, cfg: CorpusConfig, entry_id: int) -> CorpusEntry:
    verb = rng.choice(cfg.verbs)
    noun = rng.choice(cfg.nouns)
    pair = rng.random() < cfg.pair_rate
    params = rng.sample(_PARAM_POOL, 2 if pair else 1)
    names = _Names(rng, verb, noun, cfg.name_signal)
    names.used.update(params)
    body = _body(rng, verb, noun, params, names)
    while rng.random() < cfg.filler_rate and len(body) < cfg.max_statements:
        body.insert(rng.randint(0, len(body) - 1), _filler(rng, params, names))
    subtokens = (verb, noun, "pair") if pair else (verb, noun)
    fname = "_".join(subtokens)
    source = f"def {fname}({', '.join(params)}): " + "; ".join(body)
    return CorpusEntry(entry_id, source, subtokens)


def generate_corpus(cfg: CorpusConfig) -> list[CorpusEntry]:
    """Deterministically generate ``cfg.count`` distinct, runnable programs."""
    if cfg.count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(cfg.seed)
    out: list[CorpusEntry] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < cfg.count:
        attempts += 1
        if attempts > 100 * cfg.count:
            raise RuntimeError("generator cannot produce enough distinct programs")
        entry = generate_one(rng, cfg, cfg.start_id + len(out))
        if entry.source in seen:
            continue
        seen.add(entry.source)
        out.append(entry)
    return out


def check_entry(entry: CorpusEntry, trials: int = 5, seed: int = 0) -> None:
    """Parse ``entry`` and run it on random arguments from the domain."""
    fn = parse_source(entry.source)
    rng = random.Random(seed)
    for _ in range(trials):
        interpret(fn, [rng.randint(*ARG_DOMAIN) for _ in fn.params])


def write_jsonl(entries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")


def read_jsonl(path) -> list[CorpusEntry]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(CorpusEntry.from_json(json.loads(line)))
    return out


def replacement_pool() -> list[str]:
    """Every identifier the generator can emit plus neutral filler names."""
    words = set(GENERIC_NAMES) | set(FIELD_NAMES) | set(FIRST_PARAMS) | set(SECOND_PARAMS)
    words |= set(FILLER_WORDS)
    for pool in (*VERB_POOLS.values(), *NOUN_POOLS.values()):
        words |= set(pool)
    return sorted(words) + [n for n in neutral_names() if n not in words]
