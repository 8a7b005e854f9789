import pytest

from advprog.minilang import FuelExhausted, MiniRuntimeError, interpret, parse_source


def run(src, *args, **kw):
    return interpret(parse_source(src), list(args), **kw)


def test_arithmetic_and_return():
    assert run("def f(a, b): return a * b + 1", 3, 4)[0] == 13


def test_floor_division_and_builtins():
    assert run("def f(a): return a // 2", -7)[0] == -4
    assert run("def f(a, b): return max(abs(a), min(a, b))", -5, 2)[0] == 5
    assert run('def f(a): return len("abc")', 0)[0] == 3


def test_print_trace_is_collected():
    value, trace = run('def f(a): print("x"); print(a); return a', 9)
    assert value == 9 and trace == ["x", "9"]


def test_self_fields_are_per_call():
    src = "def f(a): self.s = a; return self.s"
    assert run(src, 1)[0] == 1 and run(src, 2)[0] == 2
    with pytest.raises(MiniRuntimeError):
        run("def f(a): return self.missing", 0)


def test_if_else_and_bool_literal():
    src = "def f(a): if a > 0: return True else: return False"
    assert run(src, 1)[0] is True and run(src, -1)[0] is False


def test_equality_is_type_strict():
    assert run('def f(a): return "1" == 1', 0)[0] is False


@pytest.mark.parametrize("src", [
    "def f(a): return a // 0",
    'def f(a): return a + "s"',
    "def f(a): if a: return 1 else: return 2",
    'def f(a): return "a" < "b"',
])
def test_runtime_errors(src):
    with pytest.raises(MiniRuntimeError):
        run(src, 3)


def test_arity_mismatch():
    with pytest.raises(MiniRuntimeError):
        run("def f(a, b): return a", 1)


def test_fuel_limit():
    src = "def f(a): " + "; ".join(["a = a + 1"] * 50) + "; return a"
    with pytest.raises(FuelExhausted):
        run(src, 0, fuel=10)


def test_dead_code_guard_never_fires():
    value, _ = run('def f(a): if "w" != "w": _dead = 1; return a', 4)
    assert value == 4
