"""Tree-walking interpreter used to check that obfuscations keep behaviour."""
from __future__ import annotations

from .nodes import (
    Assign,
    BinOp,
    BoolLit,
    Call,
    ExprStmt,
    FieldAccess,
    Function,
    If,
    IntLit,
    Print,
    Return,
    StrLit,
    Var,
)


class MiniRuntimeError(RuntimeError):
    pass


class FuelExhausted(MiniRuntimeError):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def _typename(v) -> str:
    return type(v).__name__


def _ints(op, a, b):
    if type(a) is not int or type(b) is not int:
        raise MiniRuntimeError(f"{op} needs ints, got {_typename(a)} and {_typename(b)}")


def _builtin(name, args):
    if name == "abs":
        if len(args) != 1 or type(args[0]) is not int:
            raise MiniRuntimeError("abs takes one int")
        return abs(args[0])
    if name in ("min", "max"):
        if len(args) != 2 or any(type(a) is not int for a in args):
            raise MiniRuntimeError(f"{name} takes two ints")
        return min(args) if name == "min" else max(args)
    if name == "len":
        if len(args) != 1 or type(args[0]) is not str:
            raise MiniRuntimeError("len takes one string")
        return len(args[0])
    raise MiniRuntimeError(f"unknown builtin {name}")


class Interpreter:
    def __init__(self, fuel: int):
        self.fuel = fuel
        self.steps = 0
        self.trace: list[str] = []

    def tick(self):
        self.steps += 1
        if self.steps > self.fuel:
            raise FuelExhausted(f"step budget {self.fuel} exhausted")

    def eval(self, e, env, fields):
        self.tick()
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, StrLit):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, Var):
            try:
                return env[e.name]
            except KeyError:
                raise MiniRuntimeError(f"unbound name {e.name}") from None
        if isinstance(e, FieldAccess):
            try:
                return fields[e.name]
            except KeyError:
                raise MiniRuntimeError(f"unset field self.{e.name}") from None
        if isinstance(e, Call):
            return _builtin(e.func, [self.eval(a, env, fields) for a in e.args])
        if isinstance(e, BinOp):
            a = self.eval(e.left, env, fields)
            b = self.eval(e.right, env, fields)
            op = e.op
            if op == "==":
                return type(a) is type(b) and a == b
            if op == "!=":
                return not (type(a) is type(b) and a == b)
            if op == "+":
                if type(a) is str and type(b) is str:
                    return a + b
                _ints(op, a, b)
                return a + b
            _ints(op, a, b)
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "//":
                if b == 0:
                    raise MiniRuntimeError("integer division by zero")
                return a // b
            if op == "<":
                return a < b
            if op == ">":
                return a > b
        raise MiniRuntimeError(f"cannot evaluate {e!r}")  # pragma: no cover

    def exec_block(self, body, env, fields):
        for s in body:
            self.tick()
            if isinstance(s, Assign):
                value = self.eval(s.value, env, fields)
                if isinstance(s.target, FieldAccess):
                    fields[s.target.name] = value
                else:
                    env[s.target.name] = value
            elif isinstance(s, Return):
                raise _Return(self.eval(s.value, env, fields))
            elif isinstance(s, Print):
                self.trace.append(str(self.eval(s.value, env, fields)))
            elif isinstance(s, ExprStmt):
                self.eval(s.value, env, fields)
            elif isinstance(s, If):
                cond = self.eval(s.cond, env, fields)
                if type(cond) is not bool:
                    raise MiniRuntimeError(f"if condition is {_typename(cond)}, not bool")
                if cond:
                    self.exec_block(s.then, env, fields)
                elif s.orelse is not None:
                    self.exec_block(s.orelse, env, fields)


def interpret(fn: Function, args, fuel: int = 10_000):
    """Run ``fn`` on integer ``args``; returns ``(return value, print trace)``.

    ``self`` is a fresh empty object per call; fields must be assigned before
    they are read.
    """
    args = list(args)
    if len(args) != len(fn.params):
        raise MiniRuntimeError(
            f"{fn.name} takes {len(fn.params)} arguments, got {len(args)}"
        )
    env = {p.name: a for p, a in zip(fn.params, args)}
    machine = Interpreter(fuel)
    try:
        machine.exec_block(fn.body, env, {})
    except _Return as r:
        return r.value, machine.trace
    return None, machine.trace
